import json
import math

import pytest

import evalstats as es


def test_normal_quantile():
    assert es.normal_quantile(0.025) == pytest.approx(1.959963984540054, abs=1e-12)
    assert es.normal_quantile(0.2) == pytest.approx(0.8416212335729142, abs=1e-12)


def test_sample_size_and_mde():
    res = es.sample_size(es.PowerSpec(delta=0.03, omega2=1 / 9))
    assert res.required_n == 969
    small = es.mde(es.PowerSpec(n=198, omega2=1 / 9, sigma2_a=1 / 6, sigma2_b=1 / 6))
    assert small.mde == pytest.approx(0.13273, abs=5e-5)
    with pytest.raises(ValueError):
        es.sample_size(es.PowerSpec(omega2=0.1))


def test_se_and_comparison():
    est = es.se_clt([0.0, 1.0, 1.0, 0.0])
    assert est.mean == 0.5
    assert est.se == pytest.approx(math.sqrt(1 / 3 / 4))
    ci = es.confidence_interval(est)
    assert ci.contains(0.5)

    clustered = es.se_clustered([1.0, 1.0, 0.0, 0.0], ["a", "a", "b", "b"])
    assert clustered.se > est.se

    a = [0.9, 0.5, 0.7, 0.3]
    b = [0.8, 0.4, 0.7, 0.1]
    paired = es.paired_diff(a, b)
    unpaired = es.unpaired_diff(es.se_clt(a), es.se_clt(b))
    assert paired.mean_diff == pytest.approx(0.1)
    assert paired.se < unpaired.se
    assert paired.method == es.ComparisonMethod.paired


def test_ingestion_round_trip(tmp_path):
    text = (
        "model_id,question_id,score\n"
        "A,q1,1\nA,q2,0\nA,q3,1\n"
        "B,q1,0\nB,q2,0\nB,q3,1\n"
    )
    recs = es.parse_records(text, es.RecordFormat.csv)
    assert len(recs) == 6
    assert recs[0].cluster_id == "q1"
    pd = es.join_paired(es.build_dataset(recs, "A"), es.build_dataset(recs, "B"))
    assert pd.n_questions == 3
    assert es.paired_diff(pd).mean_diff == pytest.approx(1 / 3)

    path = tmp_path / "scores.jsonl"
    path.write_text(es.serialize_records(recs, es.RecordFormat.jsonl))
    assert es.read_records(path) == recs

    with pytest.raises(es.InputError):
        es.parse_records("model_id,question_id\nA,q1\n", es.RecordFormat.csv)


def test_simulation_is_reproducible():
    s = es.Scenario("correlated-uniform-pair", n_questions=200, rho=0.5)
    r1 = es.run_paired_variance_experiment(s, replications=200, seed=3)
    r2 = es.run_paired_variance_experiment(s, replications=200, seed=3)
    assert r1.to_json() == r2.to_json()
    ratio = r1.metric("variance_ratio")
    assert abs(ratio.value - ratio.target) < 4 * ratio.mc_se
    assert json.loads(r1.to_json())["replications"] == 200


def test_cli_in_process():
    code, out, err = es.run_cli(["power", "--delta", "0.03", "--omega2", "0.1111111111111111", "--format", "json"])
    assert code == 0, err
    assert json.loads(out)["result"]["required_n"] == 969
    code, _, _ = es.run_cli(["power"])
    assert code == 2
