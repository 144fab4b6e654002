import json
import os
import config


def test_generate_colors():
  colors = config.generate_colors(5)
  assert len(colors) == 5
  assert len(set(colors)) == 5
  assert all(c.startswith("#") and len(c) == 7 for c in colors)
  assert len(config.generate_colors(1, "viridis")) == 1


def test_paths_exist():
  assert os.path.isdir(config.OUTPUT_PATH)
  assert os.path.isfile(config.EXPANSIONS_FILE)
  assert os.path.isdir(config.PLANTS_PATH)


def test_load_settings(tmp_path, monkeypatch):
  monkeypatch.setattr(config, "BENCH_REPS", config.BENCH_REPS)
  monkeypatch.setattr(config, "DEFAULT_DK", config.DEFAULT_DK)
  path = tmp_path / "settings.json"
  path.write_text(json.dumps({"BENCH_REPS": 2, "DEFAULT_DK": 0.05,
                              "bench_reps": 7, "NOT_A_SETTING": 1}))
  applied = config.load_settings(str(path))
  assert applied == {"BENCH_REPS": 2, "DEFAULT_DK": 0.05}
  assert config.BENCH_REPS == 2
  assert config.DEFAULT_DK == 0.05
  assert not hasattr(config, "NOT_A_SETTING")
