"""REST surface: upload, jobs, images, reviews, ledger, metrics."""

import hashlib
import json
import os

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cloudmri.acquisition import simulated_dataset
from cloudmri.gateway.api import create_app
from cloudmri.gateway.config import GatewayConfig, write_default_config
from cloudmri.gateway.service import CLASS_MARKER_HASHES, GatewayService
from cloudmri.raw_format import encode_dataset
from cloudmri.transport import seal


@pytest.fixture
def service(tmp_path):
    config_path = write_default_config(tmp_path)
    svc = GatewayService(GatewayConfig.load(config_path))
    yield svc
    svc.close()


@pytest.fixture
def client(service):
    return TestClient(create_app(service))


def sealed_container(service, n=32, seed=0):
    container = encode_dataset(simulated_dataset(n, seed=seed))
    key = service.config.keys["demo-key"]
    return container, seal(key, container, os.urandom(12)).to_bytes()


def upload(client, service, n=32, actor="op-1", seed=0):
    container, sealed = sealed_container(service, n, seed=seed)
    response = client.post(
        "/v1/datasets",
        content=sealed,
        headers={"X-Actor": actor, "X-Key-Id": "demo-key"},
    )
    return container, response


def run_fista_job(client, dataset_id, n=32, accel=2.0, actor="op-1"):
    response = client.post(
        "/v1/jobs",
        json={
            "dataset_id": dataset_id,
            "params": {"algorithm": "fista", "lambda": 0.01, "max_iters": 100},
            "mask_spec": {
                "pattern": "random_lines_center",
                "n": n,
                "acceleration": accel,
                "center_fraction": 0.08,
                "seed": 7,
            },
        },
        headers={"X-Actor": actor},
    )
    assert response.status_code == 200, response.text
    job_id = response.json()["job_id"]
    record = client.get(f"/v1/jobs/{job_id}", params={"wait_s": 30}).json()
    return job_id, record


class TestUpload:
    def test_dataset_id_is_independent_sha256(self, client, service):
        container, response = upload(client, service)
        assert response.status_code == 200
        body = response.json()
        assert body["dataset_id"] == hashlib.sha256(container).hexdigest()
        assert body["byte_count"] == len(container)
        assert body["simulated_transfer_s"] > 0

    def test_unauthorized_actor_403_with_deny_entry(self, client, service):
        _, response = upload(client, service, actor="intruder")
        assert response.status_code == 403
        entries = service.ledger.entries()
        assert entries[-1].action == "DENY" and entries[-1].actor_id == "intruder"

    def test_duplicate_upload_is_idempotent(self, client, service):
        container, first = upload(client, service)
        _, second = upload(client, service)
        assert first.json()["dataset_id"] == second.json()["dataset_id"]
        assert service.store.object_ids().count(first.json()["dataset_id"]) == 1

    def test_garbage_blob_400(self, client):
        response = client.post(
            "/v1/datasets",
            content=b"not a sealed blob at all, far too short? no: long enough",
            headers={"X-Actor": "op-1", "X-Key-Id": "demo-key"},
        )
        assert response.status_code == 400

    def test_valid_seal_invalid_container_400(self, client, service):
        key = service.config.keys["demo-key"]
        sealed = seal(key, b"CMRIRAWX not really", os.urandom(12)).to_bytes()
        response = client.post(
            "/v1/datasets",
            content=sealed,
            headers={"X-Actor": "op-1", "X-Key-Id": "demo-key"},
        )
        assert response.status_code == 400
        assert "rejected" in response.json()["error"]["message"]

    def test_unknown_key_400(self, client, service):
        _, sealed = sealed_container(service)
        response = client.post(
            "/v1/datasets",
            content=sealed,
            headers={"X-Actor": "op-1", "X-Key-Id": "nope"},
        )
        assert response.status_code == 400

    def test_unknown_profile_400(self, client, service):
        _, sealed = sealed_container(service)
        response = client.post(
            "/v1/datasets?profile=CARRIER_PIGEON",
            content=sealed,
            headers={"X-Actor": "op-1", "X-Key-Id": "demo-key"},
        )
        assert response.status_code == 400


class TestJobs:
    def test_zero_filled_on_full_mask_is_near_exact(self, client, service):
        container, response = upload(client, service)
        dataset_id = response.json()["dataset_id"]
        job = client.post(
            "/v1/jobs",
            json={
                "dataset_id": dataset_id,
                "params": {"algorithm": "zero_filled"},
                "mask_spec": {"pattern": "full", "n": 32},
            },
            headers={"X-Actor": "op-1"},
        )
        record = client.get(f"/v1/jobs/{job.json()['job_id']}", params={"wait_s": 30}).json()
        assert record["state"] == "DONE"
        assert record["metrics"]["nrmse"] <= 1e-6

    def test_fista_beats_zero_filled_on_same_data(self, client, service):
        _, response = upload(client, service)
        dataset_id = response.json()["dataset_id"]
        mask_spec = {
            "pattern": "random_lines_center", "n": 32,
            "acceleration": 2, "center_fraction": 0.08, "seed": 7,
        }
        results = {}
        for algorithm in ("zero_filled", "fista"):
            job = client.post(
                "/v1/jobs",
                json={
                    "dataset_id": dataset_id,
                    "params": {"algorithm": algorithm},
                    "mask_spec": mask_spec,
                },
                headers={"X-Actor": "op-1"},
            )
            record = client.get(
                f"/v1/jobs/{job.json()['job_id']}", params={"wait_s": 30}
            ).json()
            assert record["state"] == "DONE"
            results[algorithm] = record["metrics"]["nrmse"]
        assert results["fista"] < results["zero_filled"]

    def test_missing_dataset_404(self, client):
        response = client.post(
            "/v1/jobs",
            json={"dataset_id": "0" * 64, "params": {}, "mask_spec": {"pattern": "full", "n": 8}},
            headers={"X-Actor": "op-1"},
        )
        assert response.status_code == 404

    def test_invalid_params_400(self, client, service):
        _, response = upload(client, service)
        dataset_id = response.json()["dataset_id"]
        bad = client.post(
            "/v1/jobs",
            json={
                "dataset_id": dataset_id,
                "params": {"algorithm": "dreams"},
                "mask_spec": {"pattern": "full", "n": 32},
            },
            headers={"X-Actor": "op-1"},
        )
        assert bad.status_code == 400

    def test_unknown_job_404(self, client):
        assert client.get("/v1/jobs/job-999999").status_code == 404


class TestImages:
    def test_payload_matches_recon_magnitudes_exactly(self, client, service):
        _, response = upload(client, service)
        dataset_id = response.json()["dataset_id"]
        _, record = run_fista_job(client, dataset_id)
        payload = client.get(
            f"/v1/images/{record['image_id']}", headers={"X-Actor": "dr-1"}
        ).json()
        assert payload["width"] == payload["height"] == 32
        assert len(payload["pixels"]) == 32 * 32

        # recompute the reconstruction out-of-band and compare bit-for-bit
        from cloudmri.acquisition import kspace_from_dataset, mask_from_spec
        from cloudmri.raw_format import decode_dataset
        from cloudmri.recon import ReconParams, cs_recon

        container = service.store.get(dataset_id).data
        dataset = decode_dataset(container)
        result = cs_recon(
            kspace_from_dataset(dataset),
            mask_from_spec(record["mask_spec"]),
            ReconParams.from_dict(record["params"]),
        )
        assert payload["pixels"] == [float(v) for v in np.ravel(result.image)]
        assert payload["meta"]["job_id"] == record["job_id"]

    def test_denied_actor_gets_403_and_deny_entry(self, client, service):
        _, response = upload(client, service)
        _, record = run_fista_job(client, response.json()["dataset_id"])
        denied = client.get(
            f"/v1/images/{record['image_id']}", headers={"X-Actor": "op-1"}
        )
        assert denied.status_code == 403
        assert service.ledger.entries()[-1].action == "DENY"

    def test_missing_image_404(self, client):
        assert (
            client.get(f"/v1/images/{'f' * 64}", headers={"X-Actor": "dr-1"}).status_code
            == 404
        )


class TestReviews:
    def finished_image(self, client, service):
        _, response = upload(client, service)
        _, record = run_fista_job(client, response.json()["dataset_id"])
        return record["image_id"]

    def test_round_trip_field_for_field(self, client, service):
        image_id = self.finished_image(client, service)
        review = {
            "image_id": image_id,
            "score": 4,
            "labels": [{"x": 3, "y": 5, "w": 10, "h": 8, "text": "ghosting"}],
            "report": "Mild aliasing, diagnostic quality.",
        }
        posted = client.post("/v1/reviews", json=review, headers={"X-Actor": "dr-1"})
        assert posted.status_code == 200
        review_id = posted.json()["review_id"]
        fetched = client.get(f"/v1/reviews/{review_id}").json()
        assert fetched["score"] == 4
        assert fetched["labels"] == review["labels"]
        assert fetched["report"] == review["report"]
        assert fetched["reviewer"] == "dr-1"
        assert fetched["image_id"] == image_id

    def test_score_out_of_range_400(self, client, service):
        image_id = self.finished_image(client, service)
        for score in (0, 6):
            response = client.post(
                "/v1/reviews",
                json={"image_id": image_id, "score": score},
                headers={"X-Actor": "dr-1"},
            )
            assert response.status_code == 400

    def test_label_out_of_bounds_400(self, client, service):
        image_id = self.finished_image(client, service)
        response = client.post(
            "/v1/reviews",
            json={
                "image_id": image_id,
                "score": 3,
                "labels": [{"x": 30, "y": 0, "w": 5, "h": 5, "text": "outside"}],
            },
            headers={"X-Actor": "dr-1"},
        )
        assert response.status_code == 400

    def test_client_token_deduplicates(self, client, service):
        image_id = self.finished_image(client, service)
        body = {
            "image_id": image_id, "score": 5, "client_token": "tok-1",
            "report": "fine",
        }
        first = client.post("/v1/reviews", json=body, headers={"X-Actor": "dr-1"}).json()
        body["score"] = 2  # same token: ignored, original review returned
        second = client.post("/v1/reviews", json=body, headers={"X-Actor": "dr-1"}).json()
        assert first["review_id"] == second["review_id"]
        assert client.get(f"/v1/reviews/{first['review_id']}").json()["score"] == 5

    def test_unauthorized_reviewer_403(self, client, service):
        image_id = self.finished_image(client, service)
        response = client.post(
            "/v1/reviews",
            json={"image_id": image_id, "score": 3},
            headers={"X-Actor": "op-1"},
        )
        assert response.status_code == 403


class TestLedgerAndMetrics:
    def test_ledger_verifies_after_full_workflow(self, client, service):
        _, response = upload(client, service)
        dataset_id = response.json()["dataset_id"]
        _, record = run_fista_job(client, dataset_id)
        client.post(
            "/v1/reviews",
            json={"image_id": record["image_id"], "score": 4},
            headers={"X-Actor": "dr-1"},
        )
        client.get(f"/v1/images/{record['image_id']}", headers={"X-Actor": "nobody"})
        verdict = client.get("/v1/ledger/verify").json()
        assert verdict == {"ok": True, "first_bad_index": None}

    def test_ledger_replay_reconstructs_object_ids(self, client, service):
        _, response = upload(client, service)
        dataset_id = response.json()["dataset_id"]
        _, record = run_fista_job(client, dataset_id)
        client.post(
            "/v1/reviews",
            json={"image_id": record["image_id"], "score": 2},
            headers={"X-Actor": "dr-1"},
        )
        markers = set(CLASS_MARKER_HASHES.values())
        replayed = {
            entry.resource_hash.hex()
            for entry in service.ledger.entries()
            if entry.action in ("UPLOAD", "RECON", "REVIEW")
            and entry.resource_hash not in markers
        }
        assert replayed == set(service.store.object_ids())

    def test_every_state_change_leaves_an_entry(self, client, service):
        checkpoints = [len(service.ledger)]
        _, response = upload(client, service)
        checkpoints.append(len(service.ledger))
        _, record = run_fista_job(client, response.json()["dataset_id"])
        checkpoints.append(len(service.ledger))
        client.post(
            "/v1/reviews",
            json={"image_id": record["image_id"], "score": 3},
            headers={"X-Actor": "dr-1"},
        )
        checkpoints.append(len(service.ledger))
        assert all(b > a for a, b in zip(checkpoints, checkpoints[1:]))

    def test_metrics_counters(self, client, service):
        _, response = upload(client, service)
        run_fista_job(client, response.json()["dataset_id"])
        snapshot = client.get("/v1/metrics").json()
        assert snapshot["events_upload"] == 1
        assert snapshot["events_recon_done"] == 1
        assert snapshot["jobs_done"] == 1

    def test_store_audit_confirms_content_addressing(self, client, service):
        _, response = upload(client, service)
        run_fista_job(client, response.json()["dataset_id"])
        assert service.store.audit() == []
