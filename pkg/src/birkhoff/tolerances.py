"""Centralized numerical tolerances.

Domains built here have hyperbolic diameters of order 1-10, so double
precision leaves at least six digits of slack relative to these bounds.
"""

# interior points must stay this far from the unit circle
EPS_BOUNDARY = 1e-12

# residual for "point lies on this geodesic" (disk-model circle residual)
EPS_ON = 1e-9

# |2 Re a| - 2 band in which an isometry counts as parabolic/identity
EPS_CLS = 1e-9

# minimal angular separation of ideal endpoints
EPS_SEP = 1e-10

# geodesic samples passing closer than this to a cone point or domain
# vertex are rejected and resampled
EPS_CONE = 1e-7

# trace crossings closer than this to a vertex class are mapped to the
# diagonal (vertex-passage) edges of the dual graph
EPS_VERTEXBAND = 1e-7
