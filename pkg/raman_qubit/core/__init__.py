"""Settings, constants, errors, logging and the dense matrix algebra."""
