"""Planar-faced B-rep kernel with push-pull direct editing and
constraint-state analysis."""

from .booleans import EMPTY, INTERSECT, SUBTRACT, UNION, BooleanOp, boolean, point_classify
from .brep import Face, Solid, ValidityReport, validate_solid
from .construct import convex_from_halfspaces, make_box, transform_solid, unit_cube
from .direct_edit import (EditOutcome, PushPullEdit, ResolutionPolicy,
                          apply_direct_edit, regenerate_boundary, rotate_faces,
                          surface_at, translate_faces)
from .gcs import Constraint, Gcs, assemble, jacobian, solve_parametric
from .geometry import Plane, RigidMotion, rotation_matrix
from .gti_resolution import AuxiliaryModel, build_auxiliary, resolve_at_gtip
from .gtip import (AffectedFaceSet, DegenerateEvent, enumerate_candidate_events,
                   find_affected_faces, next_gtip)
from .io import load_model, save_model
from .mesh import TriangleMesh, solid_volume, tessellate
from .pipeline import Session, run_script
from .sai_detection import (ConstraintStateReport, OverconstraintCertificate,
                            WellConstrainedPart, evaluate_state,
                            find_maximal_wellconstrained,
                            find_minimal_overconstrained)
from .sai_resolution import (GcsUpdatePlan, PrioritizedOptions, ResolutionOption,
                             apply_resolution, auto_resolve, generate_options,
                             prioritize, sensitivity, update_gcs_after_edit)
from .tolerances import ToleranceContext, default_tolerance

__version__ = "0.1.0"
