"""Read-only HTTP query service over one loaded repository snapshot.

Wire format is plain UTF-8 text, one ``name=value`` pair per line.

POST /query request fields: exactly one of ``seed_vector`` (comma-separated
reals) or ``seed_id``; optional ``k`` (default 10), ``method`` (euclidean |
cosine | par, default euclidean), ``delta_t`` (par only, default 0.5).
Response echoes ``method``, ``k`` (and ``delta_t`` for par), then ``count``
and one ``result=<id>\\t<distance>\\t<cosine>`` line per entry in ranker
order. Floats are rendered with repr, so identical queries produce
byte-identical bodies. Item ids containing tabs or newlines cannot be
served over this protocol.

GET /health reports ``status``, ``items``, ``dim``, ``aggregation``,
``pca`` and ``normalized``.

The service never mutates the repository; any number of requests may run
concurrently against the snapshot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import (
    ArgumentError,
    DimensionError,
    EmptyRepositoryError,
    MediaRankError,
    ZeroVectorError,
)
from .ranking import (
    DEFAULT_DELTA_T,
    RankedResult,
    RankMethod,
    par_rerank,
    rank_cosine,
    rank_euclidean,
)
from .store import Repository
from .vectors import FeatureVector

__all__ = [
    "QueryRequest",
    "QueryService",
    "RequestError",
    "UnknownIdError",
    "parse_query_request",
    "serve",
]

logger = logging.getLogger(__name__)

_DEFAULT_K = 10


class RequestError(MediaRankError):
    """Malformed or invalid request body (400)."""


class UnknownIdError(MediaRankError):
    """seed_id not present in the repository (404)."""


@dataclass(frozen=True)
class QueryRequest:
    vector: FeatureVector | None
    item_id: str | None
    k: int
    method: RankMethod
    delta_t: float

    def __post_init__(self) -> None:
        if (self.vector is None) == (self.item_id is None):
            raise RequestError("exactly one of seed_vector or seed_id is required")
        if self.k < 1:
            raise RequestError(f"k must be >= 1, got {self.k}")


def _parse_fields(body: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for lineno, line in enumerate(body.splitlines(), start=1):
        if not line.strip():
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise RequestError(f"line {lineno}: expected 'name=value'")
        name = name.strip()
        if name in fields:
            raise RequestError(f"line {lineno}: duplicate field {name!r}")
        fields[name] = value.strip()
    return fields


def parse_query_request(body: str) -> QueryRequest:
    """Parse the attribute-value request body; raises RequestError on bad input."""
    fields = _parse_fields(body)
    unknown = set(fields) - {"seed_vector", "seed_id", "k", "method", "delta_t"}
    if unknown:
        raise RequestError(f"unknown fields: {', '.join(sorted(unknown))}")

    vector = None
    if "seed_vector" in fields:
        try:
            coords = [float(part) for part in fields["seed_vector"].split(",")]
            vector = FeatureVector(coords)
        except (ValueError, MediaRankError) as exc:
            raise RequestError(f"bad seed_vector: {exc}") from exc

    method_name = fields.get("method", RankMethod.EUCLIDEAN.value)
    try:
        method = RankMethod(method_name)
    except ValueError:
        raise RequestError(
            f"unknown method {method_name!r}, expected euclidean, cosine or par"
        ) from None

    try:
        k = int(fields.get("k", str(_DEFAULT_K)))
    except ValueError:
        raise RequestError(f"bad k: {fields['k']!r}") from None

    delta_raw = fields.get("delta_t")
    if delta_raw is not None and method is not RankMethod.PAR:
        raise RequestError("delta_t is only meaningful for method=par")
    try:
        delta_t = float(delta_raw) if delta_raw is not None else DEFAULT_DELTA_T
    except ValueError:
        raise RequestError(f"bad delta_t: {delta_raw!r}") from None

    return QueryRequest(
        vector=vector,
        item_id=fields.get("seed_id"),
        k=k,
        method=method,
        delta_t=delta_t,
    )


class QueryService:
    """Protocol-independent request handling over an immutable repository."""

    def __init__(self, repo: Repository):
        if len(repo) == 0:
            raise EmptyRepositoryError("refusing to serve an empty index")
        self._repo = repo
        self._pairs = repo.vector_items()

    def handle_query(self, req: QueryRequest) -> str:
        """Rank and render the response body for one parsed request."""
        if req.item_id is not None:
            item = self._repo.get(req.item_id)
            if item is None:
                raise UnknownIdError(f"unknown seed_id {req.item_id!r}")
            query = item.vector
        else:
            assert req.vector is not None
            try:
                query = self._repo.prepare_query_vector(req.vector)
            except DimensionError as exc:
                raise RequestError(str(exc)) from exc

        try:
            if req.method is RankMethod.EUCLIDEAN:
                result = rank_euclidean(query, self._pairs, req.k)
            elif req.method is RankMethod.COSINE:
                result = rank_cosine(query, self._pairs, req.k)
            else:
                result = par_rerank(query, self._pairs, req.k, req.delta_t)
        except (ZeroVectorError, ArgumentError) as exc:
            raise RequestError(str(exc)) from exc
        return self._render(result)

    @staticmethod
    def _render(result: RankedResult) -> str:
        lines = [f"method={result.method.value}", f"k={result.k_requested}"]
        if result.delta_t is not None:
            lines.append(f"delta_t={result.delta_t!r}")
        lines.append(f"count={len(result.entries)}")
        for entry in result.entries:
            lines.append(f"result={entry.item_id}\t{entry.distance!r}\t{entry.cosine!r}")
        return "\n".join(lines) + "\n"

    def handle_health(self) -> str:
        repo = self._repo
        return (
            "status=ok\n"
            f"items={len(repo)}\n"
            f"dim={repo.dim}\n"
            f"aggregation={repo.aggregation.kind.cli_name}\n"
            f"pca={'true' if repo.pca is not None else 'false'}\n"
            f"normalized={'true' if repo.normalized else 'false'}\n"
        )

    def expected_query_dim(self) -> int:
        return self._repo.pca.input_dim if self._repo.pca else self._repo.dim


class _Handler(BaseHTTPRequestHandler):
    service: QueryService  # set on the server class created in serve()

    def do_GET(self) -> None:  # noqa: N802 (http.server naming)
        if self.path != "/health":
            self._send(404, "error=not found\n")
            return
        self._send(200, self.service.handle_health())

    def do_POST(self) -> None:  # noqa: N802
        if self.path != "/query":
            self._send(404, "error=not found\n")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length).decode("utf-8")
        except (ValueError, UnicodeDecodeError):
            self._send(400, "error=unreadable request body\n")
            return
        try:
            request = parse_query_request(body)
            response = self.service.handle_query(request)
        except UnknownIdError as exc:
            self._send(404, f"error={exc}\n")
            return
        except (RequestError, MediaRankError) as exc:
            extra = ""
            if isinstance(exc.__cause__, DimensionError) or "dim" in str(exc):
                extra = f"expected_dim={self.service.expected_query_dim()}\n"
            self._send(400, f"error={exc}\n{extra}")
            return
        self._send(200, response)

    def _send(self, status: int, body: str) -> None:
        raw = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "text/plain; charset=utf-8")
        self.send_header("Content-Length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)

    def log_message(self, fmt: str, *args) -> None:
        logger.debug("%s - %s", self.address_string(), fmt % args)


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    # default backlog of 5 drops connections under concurrent load
    request_queue_size = 128


def make_server(repo: Repository, host: str, port: int) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server; refuses an empty repository."""
    service = QueryService(repo)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return _Server((host, port), handler)


def serve(repo: Repository, host: str, port: int) -> None:
    """Serve until interrupted."""
    httpd = make_server(repo, host, port)
    logger.info("serving %d items on %s:%d", len(repo), *httpd.server_address[:2])
    try:
        httpd.serve_forever()
    finally:
        httpd.server_close()
