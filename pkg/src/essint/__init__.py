"""Normal cones, extremal principles and optimality certificates for
essential intersections of set-valued maps over finite atomic measure spaces.
"""

__version__ = "0.1.0"

from ._tol import Tolerances, tolerances
from .errors import *  # noqa: F401,F403
from .geom import (ConeUnion, FinCone, HCone, Membership, Polyhedron, SetValue, distance,
                   is_normally_regular, limiting_normal_cone, nearest_point, polar,
                   polar_inv, project, regular_normal_cone, regular_normal_generators,
                   tangent_cone)
from .mspace import (AtomicMeasureSpace, PerturbationSchedule, SampledMultifunction,
                     discretize_interval, dyadic_space, essential_intersection)
from .setcalc import AumannIntegral, ConeField, aumann_integral, cone_member, integral_selection
from .extremal import (EPWitness, check_local_extremality, check_nonoverlap, check_witness,
                       conic_ep, sequential_ep)
from .vcalc import (ChipReport, check_chip, check_tangential_stability,
                    interior_normal_estimate, normals_of_intersection)
from .optimality import (Certificate, Objective, certificate_residual,
                         check_normal_qualification, check_violator, inequality_certificate,
                         sip_certificate, stochastic_certificate, strict_min_alternative)
