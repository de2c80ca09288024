//! End-to-end command-line tests: file round trips, exit codes, and every
//! subcommand exercised on the fixture corpus.

use std::path::Path;
use std::process::Command;

fn plsys() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plsys"))
}

fn write_fixtures(dir: &Path) {
    let status = plsys()
        .args(["examples", "--which", "all", "--out"])
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn parse_emit_round_trip_on_fixture_files() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    // isofy of an already-iso bisheaf reproduces the file except for the
    // field header ordering; byte-level: isofy(ex3f) == ex3f
    let out = dir.path().join("iso3f.json");
    let status = plsys()
        .args(["isofy", "--bisheaf"])
        .arg(dir.path().join("ex3f.json"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let original = std::fs::read(dir.path().join("ex3f.json")).unwrap();
    let round = std::fs::read(&out).unwrap();
    assert_eq!(original, round, "isofication of an isobisheaf must be the identity");

    // validate accepts every emitted fixture
    for name in ["ex1.json", "ex2.json", "ex3f.json", "ex3h.json"] {
        let status = plsys()
            .args(["validate", "--bisheaf"])
            .arg(dir.path().join(name))
            .status()
            .unwrap();
        assert!(status.success(), "{name} must validate");
    }
    let status = plsys()
        .args(["validate", "--etale"])
        .arg(dir.path().join("annulus.json"))
        .arg("--base")
        .arg(fixture_base(dir.path(), "ex1.json"))
        .status()
        .unwrap();
    assert!(status.success());
}

/// Extracts the complex block of a bisheaf file so étale validation can use
/// it as the base file.
fn fixture_base(dir: &Path, bisheaf: &str) -> std::path::PathBuf {
    let text = std::fs::read_to_string(dir.join(bisheaf)).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let base = value.get("complex").unwrap();
    let path = dir.join(format!("{bisheaf}.base.json"));
    std::fs::write(&path, serde_json::to_string_pretty(base).unwrap()).unwrap();
    path
}

#[test]
fn exit_codes_for_corrupt_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());

    // semantic violation: exit 1, offending square on stderr
    let text = std::fs::read_to_string(dir.path().join("ex1.json")).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let vertical = value.get_mut("vertical").unwrap().as_object_mut().unwrap();
    // corrupt a one-by-one vertical entry, keeping the shape valid
    let key = vertical
        .keys()
        .find(|k| {
            let rows = vertical[*k].as_array().unwrap();
            rows.len() == 1 && rows[0].as_array().unwrap().len() == 1
        })
        .unwrap()
        .clone();
    vertical.insert(key, serde_json::json!([["5"]]));
    let corrupted = dir.path().join("corrupted.json");
    std::fs::write(&corrupted, value.to_string()).unwrap();
    let output = plsys()
        .args(["validate", "--bisheaf"])
        .arg(&corrupted)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("square"), "stderr: {stderr}");

    // malformed file: exit 2
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    let output = plsys()
        .args(["validate", "--bisheaf"])
        .arg(&garbage)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // unsupported field tag: exit 2
    let output = plsys()
        .args(["validate", "--field", "F9", "--bisheaf"])
        .arg(dir.path().join("ex1.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn pls_reports_match_expected_fixture_reports() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let output = plsys()
        .args(["pls", "--bisheaf"])
        .arg(dir.path().join("ex1.json"))
        .arg("--etale")
        .arg(dir.path().join("annulus.json"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let report = &value["opens"][0]["report"];
    let expected_text =
        std::fs::read_to_string(dir.path().join("report-ex1-annulus.json")).unwrap();
    let expected: serde_json::Value = serde_json::from_str(&expected_text).unwrap();
    assert_eq!(*report, expected);
    assert_eq!(report["components"][0]["stalk_dim"], 1);

    // the h example over the identity open of the sphere is zero
    let output = plsys()
        .args(["pls", "--bisheaf"])
        .arg(dir.path().join("ex3h.json"))
        .arg("--etale")
        .arg(dir.path().join("identity-sphere.json"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["opens"][0]["report"]["components"][0]["stalk_dim"], 0);
}

#[test]
fn subdivide_dilate_shrink_and_span_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let base = fixture_base(dir.path(), "ex1.json");

    let status = plsys()
        .args(["subdivide", "--bisheaf"])
        .arg(dir.path().join("ex1.json"))
        .arg("--out")
        .arg(dir.path().join("ex1-sub.json"))
        .status()
        .unwrap();
    assert!(status.success());
    let status = plsys()
        .args(["validate", "--bisheaf"])
        .arg(dir.path().join("ex1-sub.json"))
        .status()
        .unwrap();
    assert!(status.success());

    let status = plsys()
        .args(["dilate", "--bisheaf"])
        .arg(dir.path().join("ex1.json"))
        .arg("--out")
        .arg(dir.path().join("ex1-dilated.json"))
        .status()
        .unwrap();
    assert!(status.success());

    let status = plsys()
        .args(["shrink", "--etale"])
        .arg(dir.path().join("annulus.json"))
        .arg("--base")
        .arg(&base)
        .arg("--out")
        .arg(dir.path().join("annulus-shrunk.json"))
        .status()
        .unwrap();
    assert!(status.success());

    // trivial self-witness span: all verdicts isomorphic, exit 0
    std::fs::write(dir.path().join("witness.json"), "{\"assign\":{}}\n").unwrap();
    let output = plsys()
        .args(["span", "--bisheaf-f"])
        .arg(dir.path().join("ex1.json"))
        .arg("--bisheaf-g")
        .arg(dir.path().join("ex1.json"))
        .arg("--witness")
        .arg(dir.path().join("witness.json"))
        .arg("--etale")
        .arg(dir.path().join("annulus.json"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let value: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(value["verdicts"][0]["to_first"], "isomorphic");
    assert_eq!(value["verdicts"][0]["to_second"], "isomorphic");
}

#[test]
fn leray_subcommand_builds_the_octahedron_bisheaf() {
    let dir = tempfile::tempdir().unwrap();
    // write the octahedron, the identity map, and a coherent orientation
    let vertices: Vec<String> = (0..6).map(|i| format!("v{i}")).collect();
    let tris = [
        [0, 2, 3],
        [0, 3, 4],
        [0, 4, 5],
        [0, 2, 5],
        [1, 2, 3],
        [1, 3, 4],
        [1, 4, 5],
        [1, 2, 5],
    ];
    let complex = serde_json::json!({
        "vertices": vertices,
        "maximal": tris
            .iter()
            .map(|t| t.iter().map(|&i| format!("v{i}")).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    });
    std::fs::write(
        dir.path().join("oct.json"),
        serde_json::to_string_pretty(&complex).unwrap(),
    )
    .unwrap();
    let identity_map = serde_json::json!({
        "vertex_map": (0..6)
            .map(|i| (format!("v{i}"), format!("v{i}")))
            .collect::<std::collections::BTreeMap<_, _>>(),
    });
    std::fs::write(
        dir.path().join("id.json"),
        serde_json::to_string_pretty(&identity_map).unwrap(),
    )
    .unwrap();
    // compute a coherent orientation in-process and write it
    {
        use plsys::simplicial::{propagate_orientation, SimplicialComplex, SimplicialPair};
        let k = SimplicialComplex::build_indexed(
            6,
            &tris.iter().map(|t| t.to_vec()).collect::<Vec<_>>(),
        )
        .unwrap();
        let pair = SimplicialPair::whole(k);
        let o = propagate_orientation(&pair).unwrap();
        let file = plsys::io::orientation_to_file(&o, &pair);
        std::fs::write(
            dir.path().join("orientation.json"),
            plsys::io::emit_json(&file).unwrap(),
        )
        .unwrap();
    }
    let status = plsys()
        .args(["leray", "--source"])
        .arg(dir.path().join("oct.json"))
        .arg("--base")
        .arg(dir.path().join("oct.json"))
        .arg("--map")
        .arg(dir.path().join("id.json"))
        .arg("--orientation")
        .arg(dir.path().join("orientation.json"))
        .args(["--degree", "0", "--out"])
        .arg(dir.path().join("leray.json"))
        .status()
        .unwrap();
    assert!(status.success());
    let status = plsys()
        .args(["validate", "--bisheaf"])
        .arg(dir.path().join("leray.json"))
        .args(["--check-invariants"])
        .status()
        .unwrap();
    assert!(status.success());
}
