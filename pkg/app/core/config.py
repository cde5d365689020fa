from dotenv import load_dotenv
from pydantic_settings import BaseSettings

load_dotenv()


class Settings(BaseSettings):
    ENVIRONMENT: str = "local"
    LOG_LEVEL: str = "WARNING"

    # Operator validation (Hermiticity, unit trace, positivity, unitarity)
    TOL_HERM: float = 1e-10
    TOL_TRACE: float = 1e-10
    TOL_PSD: float = 1e-10
    TOL_UNITARY: float = 1e-10
    TOL_PROJECTOR: float = 1e-10
    # Residual imaginary part allowed on an expectation of a self-adjoint observable
    TOL_IMAG: float = 1e-10

    # Classification / reporting conventions
    TIE_TOL: float = 1e-9
    IDEAL_TOL: float = 1e-12
    ETA_THRESHOLD: float = 1e-2
    W_FLOOR: float = 1e-12

    # Dynamics oracle
    STAT_TOL: float = 1e-8
    QUAD_TOL: float = 1e-6

    # Size caps
    MAX_VECTOR_DIM: int = 2**13
    MAX_DENSE_DIM: int = 2**11
    MAX_COMPOSITE_DIM: int = 2**12
    L_MAX_ENUM: int = 12
    L_MAX_DENSE: int = 5
    L_MAX_TIME_RESOLVED: int = 7


settings = Settings()
