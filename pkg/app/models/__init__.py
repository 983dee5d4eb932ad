from app.models.dataset import Dataset, FeatureOrder
from app.models.gam import GamModel
from app.models.loss import LossKind, LossSpec
from app.models.step_function import ExtensionMode, StepFunction
from app.models.tv import PartialSums, ProxProblem, TriangleWeights
