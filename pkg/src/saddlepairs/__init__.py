"""Saddle connection enumeration and pair counting on translation surfaces."""

from .counting import (ErrorDecomposition, GrowthFit, PairCountReport, count_pairs,
                       count_pairs_annulus, count_parallel, count_single, error_decomposition,
                       estimate_cA)
from .enumeration import (HolonomySet, SaddleConnection, holonomy_set, saddle_connections,
                          second_systole, systole)
from .lattice import Convention, CuspData, lattice_constant, parallel_growth
from .planar import LinearMap2, PlanarVector, Region, RegionTag, wedge
from .poisson import PoissonSample, cell_count_test, poisson_pair_growth, sample
from .siegelveech import (TransformRequest, approximation_error, circle_average_transform,
                          sv_transform)
from .surface import Origami, PolygonSurface, l_origami, load_surface, origami_new, torus

__version__ = "0.1.0"
