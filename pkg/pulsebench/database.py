from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from pulsebench.config import get_settings

DATABASE_URL = get_settings().database_url

# sqlite connections are shared with the request threadpool
_connect_args = {"check_same_thread": False} if DATABASE_URL.startswith("sqlite") else {}

engine = create_engine(DATABASE_URL, connect_args=_connect_args)

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
Base = declarative_base()


def init_db(bind=None) -> None:
    """Create the registry tables if they do not exist"""
    from pulsebench.records import models  # noqa: F401  (registers the tables)

    Base.metadata.create_all(bind=bind or engine)


def get_db():
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
