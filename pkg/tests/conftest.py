import pytest

from mammofuse.config import load_config
from mammofuse.phantoms import PhantomSpec, generate_phantoms
from mammofuse.pipeline import cmd_extract, cmd_refcdf

# Trimmed learner sizes keep the pipeline tests quick; the acceptance suite
# runs the full defaults.
FAST_OVERRIDES = dict(rf_trees=25, bswims_bootstraps=4, svm_epochs=100, lasso_grid_size=4)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    spec = PhantomSpec(
        count=18,
        positive_fraction=1 / 3,
        years=(2016, 2017, 2018),
        image_size=128,
        seed=42,
    )
    manifest, dl = generate_phantoms(spec, root)
    config = load_config(None, cdf_sample=20, **FAST_OVERRIDES)
    ref = cmd_refcdf(manifest, root / "ref.csv", config)
    cache, exceptions, flags = cmd_extract(manifest, ref, root / "cache.csv", config)
    return {
        "root": root,
        "spec": spec,
        "manifest": manifest,
        "dl": dl,
        "ref": ref,
        "cache": cache,
        "exceptions": exceptions,
        "flags": flags,
        "config": config,
    }
