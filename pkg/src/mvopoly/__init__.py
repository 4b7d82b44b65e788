"""Multivariate orthogonal polynomials: moment factorizations, spectral transforms and Toda flows."""

from .errors import (DegreeOverflow, DivisorNearZero, InvarianceViolated, MvopolyError,
                     NodeOffVariety, NonConvergentSeries, NoPoisedSet, PoleOnSupport,
                     RepeatedRoots, SingularBlock, SingularMinor, SingularSystem, SpecError,
                     ToleranceExceeded)
from .factorization import BlockMatrix, Factorization, block_cholesky, block_lu, quasi_det_last
from .functional import (CompositeGenerator, CurveMeasure, Diagonal, DiracMultipole,
                         DiscreteMeasure, FunctionalSpec, Kernel, QuadratureDensity,
                         apply_to_poly, cauchy_transform_1d, gram_matrix, moment)
from .mindex import GradedIndexer, enumerate_level, eval_chi, poly_of_shifts, shift_matrix
from .mvopr import OpFamily
from .polynomial import Poly
from .toda import TodaState, evolve
from .transforms import TransformSpec
from .uvarov import CurvePerturbation, MultipoleSet, Puncture

__version__ = "0.1.0"
