"""Record live API responses as JSON fixtures for the frontend tests.

Runs the service in-process against a throwaway data directory and saves
selected request/response pairs under frontend/tests/fixtures.  The UI
contract tests replay these files through a stubbed fetch, so every value
they assert on was produced by the real server.
"""

from __future__ import annotations

import importlib.resources
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from bronchial_dx.questionnaire import load_core_definition
from bronchial_dx.service import ServiceSettings, create_app

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures"


def _packaged_case() -> dict:
    ref = importlib.resources.files("bronchial_dx.data") / "fixtures" / "asthma_case.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def _save(name: str, payload: object) -> None:
    path = FIXTURE_DIR / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {path.relative_to(Path.cwd())}")


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        settings = ServiceSettings(data_dir=Path(tmp))
        client = TestClient(create_app(settings))

        _save("questionnaire_core.json", client.get("/api/questionnaire").json())
        _save(
            "questionnaire_professional.json",
            client.get("/api/questionnaire/professional").json(),
        )

        case = _packaged_case()
        res = client.post("/api/diagnose", json=case)
        assert res.status_code == 200, res.text
        _save("diagnose_request_asthma.json", case)
        _save("diagnose_asthma.json", res.json())
        case_id = res.json()["case_id"]

        all_no = {
            "responses": {qid: False for qid in load_core_definition().question_ids()}
        }
        res = client.post("/api/diagnose", json=all_no)
        assert res.status_code == 200, res.text
        _save("diagnose_request_allno.json", all_no)
        _save("diagnose_allno.json", res.json())

        feedback = {"rating": 5, "confirmed_label": "asthma", "comment": "matches the clinic finding"}
        res = client.post(f"/api/cases/{case_id}/feedback", json=feedback)
        assert res.status_code == 200, res.text
        _save("feedback_request.json", feedback)
        _save("feedback_ok.json", res.json())

        res = client.post(f"/api/cases/{case_id}/feedback", json=feedback)
        assert res.status_code == 409, res.text
        _save("feedback_conflict.json", res.json())

        res = client.post("/api/diagnose", json={"responses": {"zz": True}})
        assert res.status_code == 422, res.text
        _save("error_unknown_question.json", res.json())

        res = client.post("/api/diagnose", json={"responses": {"A": "maybe"}})
        assert res.status_code == 422, res.text
        _save("error_bad_answer_type.json", res.json())

        bad_report = dict(case)
        bad_report["report"] = {"fvc_l": 2.0, "fev1_l": 3.5}
        res = client.post("/api/diagnose", json=bad_report)
        assert res.status_code == 422, res.text
        _save("error_report_field.json", res.json())

        _save("health.json", client.get("/api/health").json())


if __name__ == "__main__":
    main()
