class Invalid(Exception): ...


class Unparseable(Invalid): ...


class Duplicate(Invalid): ...


class NotPositive(Invalid): ...


class NotEnough(Invalid): ...


class Unconverged(Exception): ...


class Missing(Exception): ...


# ECFmatch
