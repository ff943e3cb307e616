"""Collaborative sessions: ordered event broadcast with originator exclusion.

One hub process owns all sessions. Events submitted to a session are
assigned a gapless, monotonically increasing sequence number under the
session lock (the linearization point), folded into the authoritative
SessionState, and delivered to every connected member except the user who
submitted them. Disconnected members catch up by reconnecting with the last
sequence number they acknowledged; late joiners receive the reduced state.
"""
from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable

EVENT_KINDS = (
    "PackageOpened",
    "PackageClosed",
    "EntitySelected",
    "PopupOpened",
    "PopupClosed",
    "Ping",
    "TextSelection",
    "UserJoined",
    "UserLeft",
)

DEFAULT_BUFFER_LIMIT = 1024
DEFAULT_GC_AFTER_NS = 600 * 10**9  # empty-roster sessions are deleted after 10 min


class UnknownSession(KeyError):
    pass


class DuplicateUser(ValueError):
    pass


class NotAMember(ValueError):
    pass


class InvalidPayload(ValueError):
    pass


class SeqGap(ValueError):
    pass


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    session: str
    origin_user: str
    server_ts_ns: int
    kind: str
    payload: dict


@dataclass(frozen=True)
class Popup:
    entity_id: str
    position: dict
    opened_by: str


@dataclass(frozen=True)
class SessionState:
    roster: frozenset[str] = frozenset()
    open_packages: frozenset[str] = frozenset()
    selections: dict[str, str | None] = field(default_factory=dict)
    popups: dict[str, Popup] = field(default_factory=dict)
    text_selections: dict[str, dict | None] = field(default_factory=dict)
    last_seq: int = 0


def event_doc(event: SessionEvent) -> dict:
    return {
        "seq": event.seq,
        "session": event.session,
        "origin_user": event.origin_user,
        "server_ts_ns": event.server_ts_ns,
        "kind": event.kind,
        "payload": event.payload,
    }


def state_doc(state: SessionState) -> dict:
    return {
        "roster": sorted(state.roster),
        "open_packages": sorted(state.open_packages),
        "selections": {u: e for u, e in sorted(state.selections.items())},
        "popups": [
            {"entity_id": p.entity_id, "position": p.position, "opened_by": p.opened_by}
            for _, p in sorted(state.popups.items())
        ],
        "text_selections": {u: s for u, s in sorted(state.text_selections.items())},
        "last_seq": state.last_seq,
    }


# ---------------------------------------------------------------------------
# Payload schemas
# ---------------------------------------------------------------------------


def _require(payload: dict, allowed: set[str], required: set[str]) -> None:
    if not isinstance(payload, dict):
        raise InvalidPayload("payload must be an object")
    extra = set(payload) - allowed
    if extra:
        raise InvalidPayload("unexpected payload field: %s" % sorted(extra)[0])
    missing = required - set(payload)
    if missing:
        raise InvalidPayload("missing payload field: %s" % sorted(missing)[0])


def validate_payload(kind: str, payload: dict) -> None:
    """Check the kind/payload pairing; raises InvalidPayload."""
    if kind not in EVENT_KINDS:
        raise InvalidPayload("unknown event kind: %r" % kind)
    if kind in ("PackageOpened", "PackageClosed", "Ping", "PopupClosed"):
        _require(payload, {"entity_id"}, {"entity_id"})
        if not isinstance(payload["entity_id"], str) or not payload["entity_id"]:
            raise InvalidPayload("entity_id must be a non-empty string")
    elif kind == "EntitySelected":
        _require(payload, {"entity_id"}, {"entity_id"})
        if payload["entity_id"] is not None and not isinstance(payload["entity_id"], str):
            raise InvalidPayload("entity_id must be a string or null")
    elif kind == "PopupOpened":
        _require(payload, {"entity_id", "position"}, {"entity_id", "position"})
        if not isinstance(payload["entity_id"], str) or not payload["entity_id"]:
            raise InvalidPayload("entity_id must be a non-empty string")
        if not isinstance(payload["position"], dict):
            raise InvalidPayload("position must be an object")
    elif kind == "TextSelection":
        _require(payload, {"file", "range"}, {"file", "range"})
        file_, range_ = payload["file"], payload["range"]
        if file_ is None and range_ is None:
            return  # clears the user's selection
        if not isinstance(file_, str) or not file_:
            raise InvalidPayload("file must be a non-empty string")
        if not isinstance(range_, dict):
            raise InvalidPayload("range must be an object")
    elif kind in ("UserJoined", "UserLeft"):
        _require(payload, {"user"}, {"user"})
        if not isinstance(payload["user"], str) or not payload["user"]:
            raise InvalidPayload("user must be a non-empty string")


# ---------------------------------------------------------------------------
# Reducer
# ---------------------------------------------------------------------------


def reduce(state: SessionState, event: SessionEvent) -> SessionState:
    """Pure state transition; requires event.seq == state.last_seq + 1.

    Ping is ephemeral and only advances last_seq, so it never shows up in a
    late joiner's replayed state.
    """
    if event.seq != state.last_seq + 1:
        raise SeqGap("expected seq %d, got %d" % (state.last_seq + 1, event.seq))
    kind, payload, user = event.kind, event.payload, event.origin_user

    if kind == "Ping":
        return replace(state, last_seq=event.seq)
    if kind == "PackageOpened":
        return replace(
            state,
            open_packages=state.open_packages | {payload["entity_id"]},
            last_seq=event.seq,
        )
    if kind == "PackageClosed":
        return replace(
            state,
            open_packages=state.open_packages - {payload["entity_id"]},
            last_seq=event.seq,
        )
    if kind == "EntitySelected":
        selections = dict(state.selections)
        selections[user] = payload["entity_id"]
        return replace(state, selections=selections, last_seq=event.seq)
    if kind == "PopupOpened":
        popups = dict(state.popups)
        popups[payload["entity_id"]] = Popup(
            payload["entity_id"], payload["position"], user
        )
        return replace(state, popups=popups, last_seq=event.seq)
    if kind == "PopupClosed":
        popups = dict(state.popups)
        popups.pop(payload["entity_id"], None)
        return replace(state, popups=popups, last_seq=event.seq)
    if kind == "TextSelection":
        text_selections = dict(state.text_selections)
        if payload["file"] is None:
            text_selections[user] = None
        else:
            text_selections[user] = {"file": payload["file"], "range": payload["range"]}
        return replace(state, text_selections=text_selections, last_seq=event.seq)
    if kind == "UserJoined":
        return replace(
            state, roster=state.roster | {payload["user"]}, last_seq=event.seq
        )
    if kind == "UserLeft":
        left = payload["user"]
        selections = {u: e for u, e in state.selections.items() if u != left}
        text_selections = {
            u: s for u, s in state.text_selections.items() if u != left
        }
        return replace(
            state,
            roster=state.roster - {left},
            selections=selections,
            text_selections=text_selections,
            last_seq=event.seq,
        )
    raise InvalidPayload("unknown event kind: %r" % kind)


# ---------------------------------------------------------------------------
# Member connections and the hub
# ---------------------------------------------------------------------------


class MemberConnection:
    """Bounded outbound buffer for one connected member.

    Overflow drops the buffer and forces the member into reconnect-resume,
    so a slow consumer never blocks sequence assignment.
    """

    def __init__(self, user: str, limit: int = DEFAULT_BUFFER_LIMIT):
        self.user = user
        self.limit = limit
        self.overflowed = False
        self._events: list[SessionEvent] = []
        self._cond = threading.Condition()

    def push(self, event: SessionEvent) -> None:
        with self._cond:
            if self.overflowed:
                return
            if len(self._events) >= self.limit:
                self.overflowed = True
                self._events.clear()
            else:
                self._events.append(event)
            self._cond.notify_all()

    def preload(self, events: list[SessionEvent]) -> None:
        """Queue the resume backlog; not subject to the live-buffer limit."""
        with self._cond:
            self._events[0:0] = events
            self._cond.notify_all()

    def take(self) -> list[SessionEvent]:
        """Drain buffered events (may be empty)."""
        with self._cond:
            events, self._events = self._events, []
            return events

    def wait(self, timeout: float | None = None) -> list[SessionEvent]:
        """Block until events arrive (or overflow/timeout), then drain."""
        with self._cond:
            if not self._events and not self.overflowed:
                self._cond.wait(timeout)
            events, self._events = self._events, []
            return events

    def interrupt(self) -> None:
        with self._cond:
            self._cond.notify_all()


class _Session:
    def __init__(self, token: str):
        self.token = token
        self.state = SessionState()
        self.history: list[SessionEvent] = []
        self.connections: dict[str, MemberConnection] = {}
        self.lock = threading.Lock()
        self.empty_since_ns: int | None = None


class SessionHub:
    """Authoritative session registry and broadcaster (one process)."""

    def __init__(
        self,
        clock: Callable[[], int] = time.time_ns,
        buffer_limit: int = DEFAULT_BUFFER_LIMIT,
        gc_after_ns: int = DEFAULT_GC_AFTER_NS,
    ):
        self.clock = clock
        self.buffer_limit = buffer_limit
        self.gc_after_ns = gc_after_ns
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    # -- lifecycle ------------------------------------------------------------

    def create_session(self, host: str) -> str:
        """New session whose history starts with the host's UserJoined."""
        token = secrets.token_urlsafe(24)
        session = _Session(token)
        with self._lock:
            self._sessions[token] = session
        with session.lock:
            self._append(session, host, "UserJoined", {"user": host})
        return token

    def _get(self, token: str) -> _Session:
        with self._lock:
            session = self._sessions.get(token)
        if session is None:
            raise UnknownSession(token)
        return session

    def sessions(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)

    def join_session(self, token: str, user: str) -> tuple[SessionState, int]:
        """Add a user; returns the reduced state and their resume seq."""
        session = self._get(token)
        with session.lock:
            if user in session.state.roster:
                raise DuplicateUser(user)
            event = self._append(session, user, "UserJoined", {"user": user})
            return session.state, event.seq

    def leave_session(self, token: str, user: str) -> int:
        session = self._get(token)
        with session.lock:
            if user not in session.state.roster:
                raise NotAMember(user)
            event = self._append(session, user, "UserLeft", {"user": user})
            conn = session.connections.pop(user, None)
            if conn is not None:
                conn.interrupt()
            if not session.state.roster:
                session.empty_since_ns = self.clock()
            return event.seq

    def submit_event(self, token: str, origin_user: str, kind: str, payload: dict) -> int:
        """Assign the next seq, fold into state, deliver to everyone else."""
        session = self._get(token)
        with session.lock:
            if origin_user not in session.state.roster:
                raise NotAMember(origin_user)
            if kind in ("UserJoined", "UserLeft"):
                raise InvalidPayload("membership events are server-generated")
            event = self._append(session, origin_user, kind, payload)
            return event.seq

    def _append(
        self, session: _Session, origin_user: str, kind: str, payload: dict
    ) -> SessionEvent:
        validate_payload(kind, payload)
        event = SessionEvent(
            seq=session.state.last_seq + 1,
            session=session.token,
            origin_user=origin_user,
            server_ts_ns=self.clock(),
            kind=kind,
            payload=payload,
        )
        session.state = reduce(session.state, event)
        session.history.append(event)
        session.empty_since_ns = None if session.state.roster else session.empty_since_ns
        for user, conn in session.connections.items():
            if user != origin_user:
                conn.push(event)
        return event

    # -- transport attach/detach ----------------------------------------------

    def connect(self, token: str, user: str, resume_from: int = 0) -> MemberConnection:
        """Attach a transport for a roster member.

        Events after resume_from (except the member's own) are queued
        immediately, in order, ahead of anything that arrives later.
        """
        session = self._get(token)
        with session.lock:
            if user not in session.state.roster:
                raise NotAMember(user)
            old = session.connections.pop(user, None)
            if old is not None:
                old.interrupt()
            conn = MemberConnection(user, self.buffer_limit)
            conn.preload(
                [
                    event
                    for event in session.history
                    if event.seq > resume_from and event.origin_user != user
                ]
            )
            session.connections[user] = conn
            return conn

    def disconnect(self, token: str, user: str) -> None:
        try:
            session = self._get(token)
        except UnknownSession:
            return
        with session.lock:
            conn = session.connections.pop(user, None)
            if conn is not None:
                conn.interrupt()

    # -- reads ----------------------------------------------------------------

    def state(self, token: str) -> SessionState:
        return self._get(token).state

    def history(self, token: str) -> list[SessionEvent]:
        session = self._get(token)
        with session.lock:
            return list(session.history)

    # -- housekeeping -----------------------------------------------------------

    def collect_idle(self) -> int:
        """Delete sessions whose roster has been empty past the GC deadline."""
        now = self.clock()
        removed = 0
        with self._lock:
            for token in list(self._sessions):
                session = self._sessions[token]
                if (
                    not session.state.roster
                    and session.empty_since_ns is not None
                    and now - session.empty_since_ns >= self.gc_after_ns
                ):
                    del self._sessions[token]
                    removed += 1
        return removed
