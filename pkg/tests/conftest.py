import pytest

from judgematch.pipeline import RunConfig, run_pipeline
from judgematch.synthetic import make_dataset


@pytest.fixture(scope="session")
def synth_run(tmp_path_factory):
    """One small synthetic dataset with a completed pipeline run, shared across tests."""
    root = tmp_path_factory.mktemp("synth")
    paths = make_dataset(root, n_judges=24, n_ventures=9, panel_size=4, load_max=3, resamples=200)
    config = RunConfig.load(paths["config"])
    artifacts = run_pipeline(config)
    return {"paths": paths, "config": config, "artifacts": artifacts, "root": root}
