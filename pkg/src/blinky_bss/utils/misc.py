from beartype import BeartypeConf, BeartypeStrategy, beartype

# disables beartype on classes whose metaclass machinery it cannot follow (pydantic settings)
nobeartype = beartype(conf=BeartypeConf(strategy=BeartypeStrategy.O0))
