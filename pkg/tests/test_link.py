"""Link-loss model tests: parametric curve values, offsets, tabulated mode."""

import math

import numpy as np
import pytest

import satkey as sk
from satkey.link import receiver_scaling_db


class TestParametricCurve:
    def test_zenith_baseline(self):
        assert sk.LinkModel().loss_db(90.0) == pytest.approx(27.0, abs=1e-9)
        assert sk.LinkModel().eta_sys_db == pytest.approx(27.0, abs=1e-9)

    def test_offset_additive(self):
        link = sk.LinkModel().with_offset(3.0)
        assert link.eta_sys_db == pytest.approx(30.0, abs=1e-9)
        chained = sk.LinkModel().with_offset(2.0).with_offset(5.0)
        assert chained.loss_db(45.0) == pytest.approx(
            sk.LinkModel().with_offset(7.0).loss_db(45.0), rel=1e-12
        )

    def test_loss_at_ten_degrees(self):
        # Independent evaluation of the shipped curve at the window edge.
        cfg = sk.OrbitConfig()
        re, ro = cfg.earth_radius_km, cfg.orbit_radius_km
        th = math.radians(10.0)
        gamma = math.acos(re * math.cos(th) / ro) - th
        rng = math.sqrt(re**2 + ro**2 - 2 * re * ro * math.cos(gamma))
        expected = 27.0 + 20.0 * math.log10(rng / 500.0) + (1.0 / math.sin(th) - 1.0)
        assert sk.LinkModel().loss_db(10.0) == pytest.approx(expected, rel=1e-12)
        assert sk.LinkModel().loss_db(10.0) == pytest.approx(42.4, abs=0.1)

    def test_transmittance_strictly_increasing(self):
        theta = np.linspace(10.0, 90.0, 200)
        p_d = sk.LinkModel().transmittance(theta)
        assert np.all(np.diff(p_d) > 0)

    def test_out_of_range_elevation(self):
        with pytest.raises(ValueError):
            sk.LinkModel().loss_db(0.0)
        with pytest.raises(ValueError):
            sk.LinkModel().loss_db(90.5)


class TestReceiverScaling:
    def test_reference_aperture(self):
        assert receiver_scaling_db(1.2) == pytest.approx(0.0, abs=1e-12)

    def test_small_aperture(self):
        scale = receiver_scaling_db(0.213)
        assert scale == pytest.approx(15.0, abs=0.05)
        link = sk.LinkModel().for_receiver(0.213)
        assert link.eta_sys_db == pytest.approx(42.0, abs=0.05)

    def test_sixty_centimetres(self):
        assert receiver_scaling_db(0.6) == pytest.approx(20 * math.log10(2.0), rel=1e-12)
        assert receiver_scaling_db(0.6) == pytest.approx(6.02, abs=0.01)

    def test_invalid_aperture(self):
        with pytest.raises(ValueError):
            receiver_scaling_db(0.0)


class TestTabulatedCurve:
    def make_csv(self, tmp_path):
        path = tmp_path / "curve.csv"
        rows = ["elevation_deg,loss_db"]
        for el, lo in [(10, 42.0), (20, 36.0), (40, 31.0), (60, 28.5), (90, 27.0)]:
            rows.append(f"{el},{lo}")
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_nodes_reproduced_exactly(self, tmp_path):
        link = sk.LinkModel.from_csv(self.make_csv(tmp_path))
        for el, lo in [(10, 42.0), (40, 31.0), (90, 27.0)]:
            assert link.loss_db(float(el)) == pytest.approx(lo, abs=1e-9)

    def test_interpolation_monotone_and_bounded(self, tmp_path):
        link = sk.LinkModel.from_csv(self.make_csv(tmp_path))
        theta = np.linspace(10.0, 90.0, 300)
        loss = link.loss_db(theta)
        assert np.all(np.diff(loss) <= 1e-9)
        assert loss.min() >= 27.0 - 1e-9 and loss.max() <= 42.0 + 1e-9

    def test_outside_table_rejected(self, tmp_path):
        link = sk.LinkModel.from_csv(self.make_csv(tmp_path))
        with pytest.raises(ValueError):
            link.loss_db(5.0)

    def test_offset_applies_to_table(self, tmp_path):
        link = sk.LinkModel.from_csv(self.make_csv(tmp_path)).with_offset(4.0)
        assert link.eta_sys_db == pytest.approx(31.0, abs=1e-9)

    def test_non_ascending_table_rejected(self):
        with pytest.raises(ValueError):
            sk.LinkModel(curve_elevations_deg=(10.0, 10.0), curve_losses_db=(40.0, 39.0))


class TestValidation:
    def test_probability_ranges(self):
        with pytest.raises(ValueError):
            sk.LinkModel(p_ec=-1e-9)
        with pytest.raises(ValueError):
            sk.LinkModel(p_ap=1.0)
