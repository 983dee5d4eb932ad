from fastapi import APIRouter

from app.api.deps import service_errors
from app.core.exceptions import UnboundedLossError
from app.schemas.api import CertifyRequest
from app.schemas.bounds import Certificate, CertificateKind
from app.services.bounds import BoundsService

router = APIRouter(prefix="/bounds", tags=["bounds"])


@router.post("/certify", response_model=Certificate)
def certify(request: CertifyRequest):
    """
    Certificate from explicit rho and c, or from a LossSpec.
    """
    with service_errors():
        if request.rho is not None and request.c is not None:
            if request.kind == CertificateKind.UNIFORM_DEVIATION:
                return BoundsService.uniform_deviation_bound(
                    request.p, request.m, request.C, request.rho, request.c, request.delta
                )
            return BoundsService.erm_excess_bound(
                request.p, request.m, request.C, request.rho, request.c, request.delta
            )
        if request.loss is None:
            raise UnboundedLossError("Provide rho and c, or a loss with its prediction and target ranges")
        return BoundsService.certify(
            request.kind, request.p, request.m, request.C, request.loss.to_spec(), request.delta
        )
