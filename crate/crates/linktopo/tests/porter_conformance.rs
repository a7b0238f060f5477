//! Conformance run of the stemmer against the published reference
//! vocabulary (23,531 word/stem pairs).

use linktopo::lexparse::porter_stem;

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/porter/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("porter fixture present")
}

#[test]
fn matches_reference_vocabulary_exactly() {
    let voc = fixture("voc.txt");
    let expected = fixture("output.txt");
    let words: Vec<&str> = voc.lines().collect();
    let stems: Vec<&str> = expected.lines().collect();
    assert_eq!(words.len(), stems.len());
    assert_eq!(words.len(), 23_531);

    let mut mismatches = Vec::new();
    for (word, want) in words.iter().zip(&stems) {
        let got = porter_stem(word);
        if got != **want {
            mismatches.push(format!("{word} -> {got} (want {want})"));
        }
    }
    assert!(
        mismatches.is_empty(),
        "{} of {} words disagree with the reference; first 20:\n{}",
        mismatches.len(),
        words.len(),
        mismatches.iter().take(20).cloned().collect::<Vec<_>>().join("\n")
    );
}
