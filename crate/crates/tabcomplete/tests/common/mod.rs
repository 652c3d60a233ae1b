#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SE: &str = "m.0csi";

/// Actor, character and appearance node of the show's regular cast.
pub const CAST: [(&str, &str, &str); 3] = [
    ("m.03caruso", "m.0c3horatio", "m.0r3"),
    ("m.01procter", "m.0c1calleigh", "m.0r1"),
    ("m.02rodriguez", "m.0c2delko", "m.0r2"),
];

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tabcomplete"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// A show with three regular cast members linked through appearance
/// nodes, plus an unrelated component.
pub fn write_toy_kb(dir: &Path) -> PathBuf {
    let mut triples = String::new();
    for (actor, character, appearance) in CAST {
        triples.push_str(&format!("{SE}\ttv.tv_program.regular_cast\t{appearance}\n"));
        triples.push_str(&format!("{appearance}\ttv.regular_tv_appearance.actor\t{actor}\n"));
        triples.push_str(&format!("{appearance}\ttv.regular_tv_appearance.character\t{character}\n"));
        triples.push_str(&format!("{actor}\ttv.tv_actor.starring_roles\t{appearance}\n"));
    }
    triples.push_str("m.0other\tpeople.person.sibling\tm.0island\n");
    fs::write(dir.join("triples.tsv"), triples).unwrap();

    let mut entities = format!("{{\"mid\":\"{SE}\",\"name\":\"CSI: Miami\",\"notable_types\":[\"TV Program\"]}}\n");
    for (actor, character, _) in CAST {
        entities.push_str(&format!("{{\"mid\":\"{actor}\",\"name\":\"{actor}\",\"notable_types\":[\"Actor\"]}}\n"));
        entities.push_str(&format!("{{\"mid\":\"{character}\",\"name\":\"{character}\",\"notable_types\":[\"TV Character\"]}}\n"));
    }
    fs::write(dir.join("entities.jsonl"), entities).unwrap();
    fs::write(dir.join("predicates.jsonl"), "").unwrap();
    fs::write(dir.join("embeddings.txt"), "").unwrap();

    let config = dir.join("config.json");
    fs::write(
        &config,
        r#"{
  "paths": {"graph": "triples.tsv", "entities": "entities.jsonl", "predicates": "predicates.jsonl", "embeddings": "embeddings.txt"},
  "selector": "jacsim",
  "tuple_ranking": "none"
}"#,
    )
    .unwrap();
    config
}

pub fn write_query(dir: &Path, name: &str, er: (&str, &str)) -> PathBuf {
    let path = dir.join(name);
    let body = format!(
        r#"{{"se": "{SE}", "qd": "CSI: Miami cast", "cn1": "Actor", "cn2": "Character", "er1": "{}", "er2": "{}"}}"#,
        er.0, er.1
    );
    fs::write(&path, body).unwrap();
    path
}

pub fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every file below `dir`, relative path and contents, in path order.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), read(&p)));
            }
        }
    }
    out.sort();
    out
}
