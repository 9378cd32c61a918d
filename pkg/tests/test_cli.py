import subprocess
import sys
import textwrap

import numpy as np
import pytest

import latentqubo as lq
from latentqubo.cli import main


def write_config(path, body):
    path.write_text(textwrap.dedent(body))
    return str(path)


@pytest.fixture
def workspace(tmp_path, toy_bvae, half_plane_target):
    """Checkpoint, target image, and labeled dataset ready for CLI runs."""
    lq.save_bvae(toy_bvae, tmp_path / "bvae.txt")
    lq.save_pgm(half_plane_target.astype(np.float64), tmp_path / "target.pgm")
    obj = lq.TargetOverlapObjective(target=half_plane_target)
    data = lq.build_latent_dataset(toy_bvae, obj, count=50, seed=5)
    lq.save_dataset(data, tmp_path / "data.txt")
    config = write_config(
        tmp_path / "run.ini",
        """
        [pipeline]
        latent_bits = 16
        fm_rank = 4
        bvae_checkpoint = bvae.txt
        dataset = data.txt
        output_dir = out
        samples_per_iteration = 4
        iterations = 2
        seed = 21

        [schedule]
        num_sweeps = 100
        num_reads = 5

        [objective]
        kind = target_overlap
        target = target.pgm
        """,
    )
    return tmp_path, config


class TestGenCorpus:
    def test_writes_image_grid(self, tmp_path, capsys):
        out = tmp_path / "corpus.txt"
        rc = main(
            ["gen-corpus", "--kind", "half_planes", "--side", "8", "--count", "32",
             "--seed", "0", "--out", str(out)]
        )
        assert rc == 0
        assert lq.load_images(out).shape == (32, 8, 8)
        assert "wrote 32" in capsys.readouterr().out

    def test_bad_kind_rejected_by_parser(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["gen-corpus", "--kind", "spirals", "--out", str(tmp_path / "x.txt")])


class TestTrainBvae:
    def test_trains_and_saves(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.txt"
        main(
            ["gen-corpus", "--kind", "half_planes", "--side", "6", "--count", "16",
             "--seed", "1", "--out", str(corpus)]
        )
        out = tmp_path / "model.txt"
        rc = main(
            ["train-bvae", "--images", str(corpus), "--latent-bits", "8",
             "--epochs", "5", "--seed", "0", "--encoder-hidden", "16,12",
             "--decoder-hidden", "12,16", "--out", str(out)]
        )
        assert rc == 0
        model = lq.load_bvae(out)
        assert model.architecture.latent_bits == 8
        assert model.architecture.image_side == 6
        assert "pixel accuracy" in capsys.readouterr().out

    def test_missing_images(self, tmp_path):
        rc = main(
            ["train-bvae", "--images", str(tmp_path / "absent.txt"),
             "--out", str(tmp_path / "m.txt")]
        )
        assert rc == 3


class TestGenDataset:
    def test_builds_labeled_dataset(self, workspace, capsys):
        tmp_path, config = workspace
        out = tmp_path / "fresh.txt"
        rc = main(
            ["gen-dataset", "--config", config, "--bvae", str(tmp_path / "bvae.txt"),
             "--count", "25", "--seed", "9", "--out", str(out)]
        )
        assert rc == 0
        data = lq.load_dataset(out)
        assert len(data) == 25
        assert data.n == 16
        assert "best label" in capsys.readouterr().out

    def test_stratified_counts(self, tmp_path, toy_bvae):
        lq.save_bvae(toy_bvae, tmp_path / "bvae.txt")
        config = write_config(
            tmp_path / "strat.ini",
            """
            [objective]
            kind = product_efficiency
            target_fill = 0.5
            smoothness_weight = 1.0

            [stratify]
            total = 20
            bands = 0.0:0.5,0.5:1.0
            fractions = 0.5,0.5
            """,
        )
        out = tmp_path / "strat.txt"
        rc = main(
            ["gen-dataset", "--config", config, "--bvae", str(tmp_path / "bvae.txt"),
             "--count", "200", "--seed", "5", "--out", str(out)]
        )
        assert rc == 0
        data = lq.load_dataset(out)
        assert len(data) == 20
        assert int((data.Y < 0.5).sum()) == 10
        assert int((data.Y >= 0.5).sum()) == 10

    def test_missing_checkpoint(self, workspace):
        tmp_path, config = workspace
        rc = main(
            ["gen-dataset", "--config", config, "--bvae", str(tmp_path / "absent.txt"),
             "--out", str(tmp_path / "x.txt")]
        )
        assert rc == 3


class TestRunLoop:
    def test_full_run(self, workspace, capsys):
        tmp_path, config = workspace
        rc = main(["run-loop", "--config", config])
        assert rc == 0
        out = tmp_path / "out"
        for name in (
            "convergence.csv",
            "dataset_final.txt",
            "fm_final.txt",
            "best_design.pgm",
            "best_design_bits.txt",
        ):
            assert (out / name).exists()
        printed = capsys.readouterr().out
        assert "ran 2 iterations" in printed

    def test_seed_and_out_overrides(self, workspace):
        tmp_path, config = workspace
        rc = main(
            ["run-loop", "--config", config, "--seed", "77",
             "--out", str(tmp_path / "elsewhere")]
        )
        assert rc == 0
        assert (tmp_path / "elsewhere" / "convergence.csv").exists()

    def test_missing_config_file(self, tmp_path):
        rc = main(["run-loop", "--config", str(tmp_path / "absent.ini")])
        assert rc == 3

    def test_missing_input_artifact(self, workspace):
        tmp_path, config = workspace
        (tmp_path / "bvae.txt").unlink()
        rc = main(["run-loop", "--config", config])
        assert rc == 3

    def test_runtime_error_from_mismatched_dataset(self, workspace, toy_bvae, capsys):
        tmp_path, config = workspace
        rng = np.random.default_rng(0)
        wrong = lq.LabeledDataset(
            X=rng.integers(0, 2, (10, 8)).astype(np.uint8),
            Y=rng.random(10),
            provenance=("random",) * 10,
        )
        lq.save_dataset(wrong, tmp_path / "data.txt")
        rc = main(["run-loop", "--config", config])
        assert rc == 4
        assert "error" in capsys.readouterr().err


class TestConfigErrors:
    def test_unknown_key(self, workspace):
        tmp_path, _ = workspace
        config = write_config(
            tmp_path / "bad.ini",
            """
            [pipeline]
            latent_bits = 16
            fm_rank = 4
            bvae_checkpoint = bvae.txt
            dataset = data.txt
            output_dir = out
            typo_key = 5

            [objective]
            kind = target_overlap
            target = target.pgm
            """,
        )
        assert main(["run-loop", "--config", config]) == 2

    def test_unknown_section(self, workspace, capsys):
        tmp_path, _ = workspace
        config = write_config(
            tmp_path / "bad.ini",
            """
            [pipeline]
            latent_bits = 16
            fm_rank = 4
            bvae_checkpoint = bvae.txt
            dataset = data.txt
            output_dir = out

            [objective]
            kind = target_overlap
            target = target.pgm

            [annealer]
            sweeps = 10
            """,
        )
        assert main(["run-loop", "--config", config]) == 2
        assert "unknown config section" in capsys.readouterr().err

    def test_missing_objective_section(self, workspace):
        tmp_path, _ = workspace
        config = write_config(
            tmp_path / "bad.ini",
            """
            [pipeline]
            latent_bits = 16
            fm_rank = 4
            bvae_checkpoint = bvae.txt
            dataset = data.txt
            output_dir = out
            """,
        )
        assert main(["run-loop", "--config", config]) == 2

    def test_bad_objective_kind(self, workspace):
        tmp_path, _ = workspace
        config = write_config(
            tmp_path / "bad.ini",
            """
            [pipeline]
            latent_bits = 16
            fm_rank = 4
            bvae_checkpoint = bvae.txt
            dataset = data.txt
            output_dir = out

            [objective]
            kind = resonance
            """,
        )
        assert main(["run-loop", "--config", config]) == 2

    def test_missing_required_key(self, workspace):
        tmp_path, _ = workspace
        config = write_config(
            tmp_path / "bad.ini",
            """
            [pipeline]
            fm_rank = 4
            bvae_checkpoint = bvae.txt
            dataset = data.txt
            output_dir = out

            [objective]
            kind = target_overlap
            target = target.pgm
            """,
        )
        assert main(["run-loop", "--config", config]) == 2

    def test_non_numeric_value(self, workspace, capsys):
        tmp_path, _ = workspace
        config = write_config(
            tmp_path / "bad.ini",
            """
            [pipeline]
            latent_bits = many
            fm_rank = 4
            bvae_checkpoint = bvae.txt
            dataset = data.txt
            output_dir = out

            [objective]
            kind = target_overlap
            target = target.pgm
            """,
        )
        assert main(["run-loop", "--config", config]) == 2
        assert "invalid value" in capsys.readouterr().err


class TestSampleOnce:
    def test_writes_sample_csv(self, workspace, capsys):
        tmp_path, config = workspace
        out = tmp_path / "samples.csv"
        rc = main(["sample-once", "--config", config, "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "rank,energy,occurrences,bits"
        assert len(lines) > 1
        assert "best sampled energy" in capsys.readouterr().out


class TestEval:
    def test_image_mode(self, workspace, capsys):
        tmp_path, config = workspace
        rc = main(["eval", "--config", config, "--image", str(tmp_path / "target.pgm")])
        assert rc == 0
        assert "figure of merit: 1.000000" in capsys.readouterr().out

    def test_bits_mode(self, workspace, capsys):
        tmp_path, config = workspace
        rc = main(
            ["eval", "--config", config, "--bits", "0" * 16,
             "--bvae", str(tmp_path / "bvae.txt")]
        )
        assert rc == 0
        assert "figure of merit:" in capsys.readouterr().out

    def test_bits_without_checkpoint(self, workspace, capsys):
        tmp_path, config = workspace
        rc = main(["eval", "--config", config, "--bits", "0" * 16])
        assert rc == 2
        assert "--bits together with --bvae" in capsys.readouterr().err

    def test_missing_image(self, workspace):
        tmp_path, config = workspace
        rc = main(["eval", "--config", config, "--image", str(tmp_path / "absent.pgm")])
        assert rc == 3


class TestCheckHardware:
    def test_fits(self, workspace, capsys):
        tmp_path, config = workspace
        rc = main(["check-hardware", "--config", config, "--max-clique", "180"])
        assert rc == 0
        assert "fits a clique limit of 180" in capsys.readouterr().out

    def test_does_not_fit(self, workspace, capsys):
        tmp_path, config = workspace
        with pytest.warns(UserWarning):
            rc = main(["check-hardware", "--config", config, "--max-clique", "8"])
        assert rc == 0
        assert "does not fit" in capsys.readouterr().out


class TestExportCsv:
    def test_exports_rows(self, workspace, capsys):
        tmp_path, config = workspace
        out = tmp_path / "export.csv"
        rc = main(["export-csv", "--dataset", str(tmp_path / "data.txt"), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "bits,label,provenance"
        assert len(lines) == 51
        bits, label, tag = lines[1].split(",")
        assert set(bits) <= {"0", "1"} and len(bits) == 16
        float(label)
        assert tag == "random"

    def test_missing_dataset(self, tmp_path):
        rc = main(
            ["export-csv", "--dataset", str(tmp_path / "absent.txt"),
             "--out", str(tmp_path / "x.csv")]
        )
        assert rc == 3


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        out = tmp_path / "corpus.txt"
        proc = subprocess.run(
            [sys.executable, "-m", "latentqubo", "gen-corpus", "--kind", "stripes",
             "--count", "4", "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert out.exists()
