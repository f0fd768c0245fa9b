import pytest

from mammofuse.config import ConfigError, load_config
from mammofuse.manifest import MANIFEST_HEADER, ManifestError, parse_manifest


def write_manifest(tmp_path, rows):
    path = tmp_path / "manifest.csv"
    path.write_text("\n".join([MANIFEST_HEADER] + rows) + "\n")
    return path


class TestManifest:
    def test_single_patient_four_views(self, tmp_path):
        rows = [
            f"P1,2016,{lat},{view},48.5,1,0.1,images/P1_{lat}_{view}.pgm"
            for lat in ("L", "R")
            for view in ("CC", "MLO")
        ]
        records = parse_manifest(write_manifest(tmp_path, rows))
        assert len(records) == 4
        assert {r.patient_id for r in records} == {"P1"}
        assert records[0].age_years == 48.5
        assert records[0].pixel_spacing_mm == 0.1

    def test_duplicate_view_names_both_rows(self, tmp_path):
        rows = [
            "P1,2016,L,CC,48,1,0.1,a.pgm",
            "P1,2016,L,CC,48,1,0.1,b.pgm",
        ]
        with pytest.raises(ManifestError, match="row 3.*row 2"):
            parse_manifest(write_manifest(tmp_path, rows))

    def test_inconsistent_patient_label_rejected(self, tmp_path):
        rows = [
            "P1,2016,L,CC,48,1,0.1,a.pgm",
            "P1,2016,R,CC,48,0,0.1,b.pgm",
        ]
        with pytest.raises(ManifestError, match="label"):
            parse_manifest(write_manifest(tmp_path, rows))

    def test_inconsistent_patient_year_rejected(self, tmp_path):
        rows = [
            "P1,2016,L,CC,48,1,0.1,a.pgm",
            "P1,2017,R,CC,48,1,0.1,b.pgm",
        ]
        with pytest.raises(ManifestError, match="year"):
            parse_manifest(write_manifest(tmp_path, rows))

    def test_header_and_value_validation(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ManifestError, match="header"):
            parse_manifest(path)
        with pytest.raises(ManifestError, match="laterality"):
            parse_manifest(write_manifest(tmp_path, ["P1,2016,X,CC,48,1,0.1,a.pgm"]))
        with pytest.raises(ManifestError, match="unparsable"):
            parse_manifest(write_manifest(tmp_path, ["P1,20x6,L,CC,48,1,0.1,a.pgm"]))
        with pytest.raises(ManifestError, match="label"):
            parse_manifest(write_manifest(tmp_path, ["P1,2016,L,CC,48,2,0.1,a.pgm"]))


class TestConfig:
    def test_defaults(self):
        config = load_config(None)
        assert config.cdf_bins == 1024
        assert config.glcm_levels == 32
        assert config.rf_trees == 200
        assert config.periphery_band_mm == 2.0
        assert config.threshold_policy == "youden"

    def test_file_and_override(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nglcm.levels=16\nrf.trees = 50\nrun.seed=99\n")
        config = load_config(path, seed=7)
        assert config.glcm_levels == 16
        assert config.rf_trees == 50
        assert config.seed == 7  # CLI override beats the file

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("glcm.levls=16\n")
        with pytest.raises(ConfigError, match="unknown config key"):
            load_config(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("rf.trees=many\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_policy_validation(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("threshold.policy=magic\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_learner_params_mirror_config(self):
        params = load_config(None).learner_params()
        assert params.knn_k == 5
        assert params.bswims_z_threshold == 1.96
        assert params.rf_max_depth == 12
