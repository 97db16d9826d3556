use crashviz_core::prompt::{prompt_text, DAMAGE_GUIDE, SECTION_HEADERS};
use crashviz_core::{build_prompt, standard_template, Compass};

const GOLDEN: &str = include_str!("golden/prompt_default.txt");

#[test]
fn default_prompt_matches_golden_file() {
    let bundle = build_prompt(&standard_template(), None);
    assert_eq!(bundle.text.as_bytes(), GOLDEN.as_bytes());
}

#[test]
fn golden_contains_headers_and_guide() {
    for header in SECTION_HEADERS {
        assert!(GOLDEN.contains(&format!("{header}:\n")), "{header}");
    }
    for line in DAMAGE_GUIDE {
        assert!(GOLDEN.lines().any(|l| l == line), "{line}");
    }
    assert!(GOLDEN.contains("1 = Left Front Corner (Driver's headlight)\n"));
    assert!(GOLDEN.contains("13 = Roof / Hood / Trunk Top\n"));
}

#[test]
fn renaming_every_leg_touches_only_layout_lines() {
    let tpl = standard_template()
        .with_road_name(Compass::North, "A")
        .with_road_name(Compass::East, "B")
        .with_road_name(Compass::South, "C")
        .with_road_name(Compass::West, "D");
    let text = prompt_text(&tpl);
    let changed: Vec<(&str, &str)> = GOLDEN
        .lines()
        .zip(text.lines())
        .filter(|(a, b)| a != b)
        .collect();
    assert_eq!(
        changed,
        [
            ("Northbound: US 9", "Northbound: A"),
            ("Eastbound: Dunning Street", "Eastbound: B"),
            ("Southbound: US 9 / US 7", "Southbound: C"),
            ("Westbound: NY 67", "Westbound: D"),
        ]
    );
    // The example narrative is illustrative and keeps its road names.
    assert!(text.contains("from Dunning Street (eastbound)"));
}
