"""Access management: the trusted third party between users and
collections. Local identity registry, anonymizing profile server, rights
broker matching user category closures against item access terms, and
aggregate-only usage reporting."""

from .accounts import Session, SessionStore, UserRegistry
from .categories import CategoryRegistry
from .policy import AccessPolicy, load_policy
from .profile import ProfileStore
from .rights import Decision, RightsBroker

__all__ = [
    "AccessPolicy",
    "CategoryRegistry",
    "Decision",
    "ProfileStore",
    "RightsBroker",
    "Session",
    "SessionStore",
    "UserRegistry",
    "load_policy",
]
