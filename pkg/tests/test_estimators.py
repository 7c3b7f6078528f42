import numpy as np
import pytest
from sklearn.base import clone

from siapprox.estimators import EmpiricalOrder, FSIOrder, MaskAnalyzer, PSIOrder
from siapprox.generators import bspline, fredrickson
from siapprox.refinement import bspline_mask


@pytest.mark.parametrize("est", [PSIOrder(s=0.5), FSIOrder(lattice_radius=8), MaskAnalyzer(k_max=3),
                                 EmpiricalOrder(nodes=32)])
def test_clone_and_params(est):
    c = clone(est)
    assert c.get_params() == est.get_params()
    c.set_params(s=1.0)
    assert c.s == 1.0 and est.get_params()["s"] != 1.0


def test_psi_order_fit():
    e = PSIOrder().fit(bspline(3))
    assert e.order_ == 3 and e.sf_order_ == 3


def test_fsi_order_fit():
    e = FSIOrder(index_set=[[0, 2 * np.pi], [2 * np.pi, 0]]).fit(fredrickson())
    assert e.order_ == 3 and e.bound_ == 3 and e.certified_


def test_mask_analyzer():
    e = MaskAnalyzer(k_max=3).fit(bspline_mask(2))
    assert (e.N_, e.dim_, e.k_star_) == (0, 1, 2)
    assert e.coherent_order_ == 2


def test_empirical_order():
    e = EmpiricalOrder(levels=(3, 7)).fit(bspline(2))
    assert abs(e.order_ - 2) <= 0.15
