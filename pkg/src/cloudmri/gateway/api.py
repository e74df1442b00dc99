"""REST surface over GatewayService.

Bodies are JSON except the dataset upload, which takes the sealed blob as raw
bytes. The actor is a trusted X-Actor header: authorization (policy rules) is
enforced, authentication is out of scope.
"""

from __future__ import annotations

from fastapi import FastAPI, Header, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from cloudmri.gateway.service import GatewayError, GatewayService


class LabelBox(BaseModel):
    x: int
    y: int
    w: int
    h: int
    text: str = ""


class JobRequest(BaseModel):
    dataset_id: str
    params: dict = Field(default_factory=dict)
    mask_spec: dict


class ReviewRequest(BaseModel):
    image_id: str
    score: int
    labels: list[LabelBox] = Field(default_factory=list)
    report: str = ""
    client_token: str | None = None


def create_app(service: GatewayService) -> FastAPI:
    app = FastAPI(title="cloudmri gateway", version="0.1.0")
    app.state.service = service

    @app.exception_handler(GatewayError)
    async def _gateway_error(_request: Request, exc: GatewayError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": type(exc).__name__, "message": str(exc)}},
        )

    @app.post("/v1/datasets")
    async def upload_dataset(
        request: Request,
        x_actor: str = Header(alias="X-Actor"),
        x_key_id: str = Header(alias="X-Key-Id"),
        profile: str | None = Query(default=None),
    ):
        sealed = await request.body()
        return service.upload_dataset(x_actor, sealed, x_key_id, profile)

    @app.post("/v1/jobs")
    def submit_job(body: JobRequest, x_actor: str = Header(alias="X-Actor")):
        job_id = service.submit_job(x_actor, body.dataset_id, body.params, body.mask_spec)
        return {"job_id": job_id}

    @app.get("/v1/jobs")
    def list_jobs():
        return {"jobs": service.list_jobs()}

    @app.get("/v1/jobs/{job_id}")
    def job_status(job_id: str, wait_s: float = Query(default=0.0, ge=0.0, le=300.0)):
        if wait_s > 0:
            return service.wait_for_job(job_id, timeout_s=wait_s)
        return service.job_status(job_id)

    @app.get("/v1/images/{image_id}")
    def get_image(image_id: str, x_actor: str = Header(alias="X-Actor")):
        return service.get_image(x_actor, image_id)

    @app.post("/v1/reviews")
    def submit_review(body: ReviewRequest, x_actor: str = Header(alias="X-Actor")):
        review = {
            "image_id": body.image_id,
            "score": body.score,
            "labels": [label.model_dump() for label in body.labels],
            "report": body.report,
        }
        review_id = service.submit_review(x_actor, review, client_token=body.client_token)
        return {"review_id": review_id}

    @app.get("/v1/reviews/{review_id}")
    def get_review(review_id: str):
        return service.get_review(review_id)

    @app.get("/v1/ledger/verify")
    def verify_ledger():
        return service.verify_ledger()

    @app.get("/v1/metrics")
    def metrics():
        return service.metrics()

    return app
