"""HTTP surface over the gateway.

All errors come back as {"error": {"code", "message"}} with a machine-readable
code. When the config sets an api_token, every request must carry
"Authorization: Bearer <token>".
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .gateway import ApiError, ServiceGateway


class RegisterBody(BaseModel):
    user_id: str


class RatingBody(BaseModel):
    user_id: str
    value: int
    ts: str | None = None


class ReadBody(BaseModel):
    user_id: str
    message_id: str
    ts: str | None = None


class TrainBody(BaseModel):
    as_of_day: int | None = None


class ClusterBody(BaseModel):
    force: bool = False


def _error(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def create_app(gateway: ServiceGateway) -> FastAPI:
    app = FastAPI(title="nudgeloop", docs_url=None, redoc_url=None)
    token = gateway.cfg.api_token

    @app.middleware("http")
    async def auth(request: Request, call_next):
        if token:
            header = request.headers.get("authorization", "")
            if header != f"Bearer {token}":
                return _error("UNAUTHORIZED", "missing or invalid bearer token", 401)
        return await call_next(request)

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return _error(exc.code, str(exc), exc.status)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error("VALIDATION", str(exc.errors()[:1]), 422)

    @app.post("/users")
    def register(body: RegisterBody):
        return gateway.register_user(body.user_id)

    @app.post("/events/rating")
    def post_rating(body: RatingBody):
        return gateway.post_rating(body.user_id, body.value, body.ts)

    @app.post("/events/message-read")
    def post_read(body: ReadBody):
        return gateway.post_message_read(body.user_id, body.message_id, body.ts)

    @app.get("/inbox/{user_id}")
    def inbox(user_id: str):
        return gateway.inbox(user_id)

    @app.get("/decisions/{user_id}")
    def decisions(user_id: str):
        return gateway.decisions_for(user_id)

    @app.get("/metrics")
    def metrics(days: int | None = None):
        return gateway.metrics(days)

    @app.post("/admin/train")
    def train(body: TrainBody | None = None):
        return gateway.train_now(body.as_of_day if body else None)

    @app.post("/admin/cluster")
    def cluster(body: ClusterBody | None = None):
        return gateway.cluster_now(body.force if body else False)

    @app.get("/healthz")
    def health():
        return gateway.health()

    return app
