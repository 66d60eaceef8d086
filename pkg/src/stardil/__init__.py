"""Dilations of positive semidefinite maps on finite *-semigroupoids."""

from __future__ import annotations

from .algebroid import (
    AmplifiedElement,
    FormalElement,
    PositiveForm,
    StarAlgebroid,
    amplify_map,
    linear_extend,
    positive_form_rep,
    sample_cp_check,
    sqrt_one_minus,
)
from .ckt import CKTFamily, check_restricted_orthogonality, induce_representation, validate_ckt
from .dilation import (
    Dilation,
    check_partial_isometries,
    dilate,
    embed_unital,
    minimalize,
    unitary_equivalence,
    verify_dilation,
)
from .errors import *  # noqa: F401,F403
from .free import (
    DirectedGraph,
    Word,
    free_groupoid,
    free_semigroupoid,
    free_star_semigroupoid,
    path_count,
    reduce_word,
)
from .leftreg import check_lr_properties, left_regular, multiplicity_profile
from .maps import CoherentMap, bound_constant, check_coherent, check_psd, check_unital, fiber_gram
from .semigroupoid import (
    UNDEF,
    SemigroupoidTable,
    classify,
    cyclic_group,
    fibers,
    from_group,
    from_relation,
    pair_groupoid,
    transformation_semigroupoid,
    validate,
)

__version__ = "0.1.0"
