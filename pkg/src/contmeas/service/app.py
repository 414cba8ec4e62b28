"""FastAPI wrapper around the core package.

Domain errors surface as HTTP 400 with the exception class name; payload
shape problems are pydantic's usual 422. All heavy work happens in the
core modules; this layer only decodes payloads and shapes responses.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import ContmeasError
from ..harness import RunConfig, run_config, self_test_suite
from ..information import McConfig, MutualEntropyReport, mutual_entropy_report
from ..model import MeasurementModel, quasi_completeness_check, validate_model
from ..presets import PRESETS, load_preset
from ..semigroup import increment_characteristic
from ..serialization import decode_matrix
from . import schemas

STATE_TOKENS = {
    "mixed": lambda d: np.eye(d, dtype=complex) / d,
    "ground": lambda d: np.diag([0.0] * (d - 1) + [1.0]).astype(complex),
    "excited": lambda d: np.diag([1.0] + [0.0] * (d - 1)).astype(complex),
    "plus": lambda d: np.full((d, d), 1.0 / d, dtype=complex),
}


def resolve_model(payload: dict | str) -> MeasurementModel:
    if isinstance(payload, str):
        if payload not in PRESETS:
            raise HTTPException(
                status_code=400,
                detail=f"unknown preset {payload!r}; available: {sorted(PRESETS)}",
            )
        return load_preset(payload)
    return validate_model(payload)


def resolve_state(payload, dim: int) -> np.ndarray:
    if isinstance(payload, str):
        maker = STATE_TOKENS.get(payload)
        if maker is None:
            raise HTTPException(
                status_code=400,
                detail=f"unknown state token {payload!r}; "
                f"available: {sorted(STATE_TOKENS)}",
            )
        return maker(dim)
    return decode_matrix(payload)


def _estimate(pair: tuple[float, float]) -> schemas.Estimate:
    return schemas.Estimate(value=pair[0], se=pair[1])


def report_to_response(rep: MutualEntropyReport) -> schemas.ReportResponse:
    return schemas.ReportResponse(
        t=rep.t,
        s_q_initial=rep.s_q_initial,
        s_q_eta=rep.s_q_eta,
        s_pi_1=_estimate(rep.s_pi_1),
        s_pi_1_direct=_estimate(rep.s_pi_1_direct),
        s_pi_2=_estimate(rep.s_pi_2),
        s_pi_2_alt=_estimate(rep.s_pi_2_alt),
        s_pi_3=rep.s_pi_3,
        s_sigma_pi_1=_estimate(rep.s_sigma_pi_1),
        s_sigma_pi_2=_estimate(rep.s_sigma_pi_2),
        s_sigma_pi_3=_estimate(rep.s_sigma_pi_3),
        s_sigma_pi=_estimate(rep.s_sigma_pi),
        s_sigma_pi_recheck=_estimate(rep.s_sigma_pi_recheck),
        amount_of_information=_estimate(rep.amount_of_information),
        i_p_q=_estimate(rep.i_p_q),
        chain_residuals=[_estimate(r) for r in rep.chain_residuals],
        bounds_ok=rep.bounds_ok,
        n_traj=rep.n_traj,
        dt=rep.dt,
        master_seed=rep.master_seed,
    )


def create_app() -> FastAPI:
    api = FastAPI(title="contmeas", version=__version__)

    @api.exception_handler(ContmeasError)
    async def _domain_error(request, exc: ContmeasError):
        from fastapi.responses import JSONResponse

        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @api.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @api.post("/api/validate", response_model=schemas.ValidateResponse)
    def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
        try:
            model = resolve_model(req.model)
        except ContmeasError as exc:
            return schemas.ValidateResponse(
                ok=False, error=type(exc).__name__, detail=str(exc)
            )
        qc = quasi_completeness_check(model)
        return schemas.ValidateResponse(
            ok=True,
            dim=model.dim,
            n_channels=len(model.channels),
            z_values=list(model.z_values),
            total_rate=model.total_rate,
            quasi_completeness=schemas.QuasiCompleteness(
                c1_holds=qc.c1_holds,
                c2_holds=qc.c2_holds,
                max_deviation_c2=qc.max_deviation_c2,
            ),
        )

    @api.post("/api/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
        model = resolve_model(req.model)
        state = resolve_state(req.state, model.dim)
        config = RunConfig(
            model=model,
            initial_state=state,
            t_max=req.t_max,
            dt=req.dt,
            n_trajectories=req.n_traj,
            master_seed=req.master_seed,
            mode=req.mode,
            outputs=tuple(req.outputs),
            snapshot_stride=req.snapshot_stride,
        )
        series, raw = run_config(config, workers=req.workers)
        manifest = {
            "version": __version__,
            "t_max": req.t_max,
            "dt": req.dt,
            "n_traj": req.n_traj,
            "master_seed": req.master_seed,
            "mode": req.mode,
            "outputs": list(req.outputs),
            "snapshot_stride": req.snapshot_stride,
            "repair_count": raw.repair_count,
            "dead_count": raw.dead_count,
        }
        return schemas.SimulateResponse(
            times=[float(t) for t in series.times],
            series={
                name: schemas.SeriesColumn(
                    mean=series.means[name].tolist(),
                    se=series.ses[name].tolist(),
                )
                for name in series.means
            },
            manifest=manifest,
        )

    @api.post(
        "/api/characteristic", response_model=schemas.CharacteristicResponse
    )
    def characteristic(
        req: schemas.CharacteristicRequest,
    ) -> schemas.CharacteristicResponse:
        model = resolve_model(req.model)
        state = resolve_state(req.state, model.dim)
        times = np.linspace(0.0, req.t_max, req.points)
        values = [
            increment_characteristic(model, state, req.k, float(t))
            for t in times
        ]
        return schemas.CharacteristicResponse(
            t=[float(t) for t in times],
            kappa=req.k,
            re=[v.real for v in values],
            im=[v.imag for v in values],
        )

    @api.post("/api/report", response_model=schemas.ReportResponse)
    def report(req: schemas.ReportRequest) -> schemas.ReportResponse:
        model = resolve_model(req.model)
        state = resolve_state(req.state, model.dim)
        rep = mutual_entropy_report(
            model,
            state,
            None,
            req.t,
            McConfig(
                n_traj=req.n_traj,
                dt=req.dt,
                master_seed=req.master_seed,
                workers=req.workers,
            ),
        )
        return report_to_response(rep)

    @api.post("/api/selftest", response_model=schemas.SelfTestResponse)
    def selftest(req: schemas.SelfTestRequest) -> schemas.SelfTestResponse:
        kwargs = {"scale": req.scale, "workers": req.workers}
        if req.seed is not None:
            kwargs["seed"] = req.seed
        rep = self_test_suite(**kwargs)
        return schemas.SelfTestResponse(**rep.to_dict())

    return api


app = create_app()
