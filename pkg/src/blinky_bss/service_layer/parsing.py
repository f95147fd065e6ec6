from blinky_bss.domain import exceptions, model


def parse_algorithm(name: str | None) -> model.Algorithm:
    if name is None:
        name = ""
    try:
        return model.Algorithm(name.strip().lower())
    except ValueError:
        supported = ", ".join(algorithm.value for algorithm in model.Algorithm)
        raise exceptions.UnsupportedAlgorithmError(
            f"Unsupported algorithm: {name!r} (expected one of {supported})"
        )
