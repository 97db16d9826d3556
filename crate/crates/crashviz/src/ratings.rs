//! Which sheet stands for each (case, model) when aggregating.
//!
//! A consensus sheet wins. Otherwise human sheets are used when every
//! human rater agrees; a disagreement without consensus leaves the pair
//! out and reports the conflict. The automatic sheet is the fallback when
//! nobody has rated by hand.

use std::collections::BTreeMap;

use crashviz_core::{merge_ratings, ConsensusSheet, Rater, ScoreSheet};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    pub sheets: Vec<ScoreSheet>,
    /// (case, model) pairs whose human raters disagree.
    pub unresolved: Vec<ConsensusSheet>,
}

fn by_pair(sheets: &[ScoreSheet]) -> BTreeMap<(&str, &str), Vec<&ScoreSheet>> {
    let mut groups: BTreeMap<(&str, &str), Vec<&ScoreSheet>> = BTreeMap::new();
    for s in sheets {
        groups.entry((s.case_id.as_str(), s.model_id.as_str())).or_default().push(s);
    }
    for group in groups.values_mut() {
        group.sort_by(|a, b| a.rater.cmp(&b.rater));
    }
    groups
}

/// Pairwise merge of the first two human raters who disagree.
fn human_conflict(humans: &[&ScoreSheet]) -> Option<ConsensusSheet> {
    let first = humans.first()?;
    let other = humans.iter().skip(1).find(|h| h.scores != first.scores)?;
    merge_ratings(first, other).ok()
}

pub fn select_sheets(sheets: &[ScoreSheet]) -> Selection {
    let mut out = Selection::default();
    for group in by_pair(sheets).into_values() {
        if let Some(c) = group.iter().find(|s| s.rater == Rater::Consensus) {
            out.sheets.push((*c).clone());
            continue;
        }
        let humans: Vec<&ScoreSheet> = group.iter().copied().filter(|s| s.rater.is_human()).collect();
        if !humans.is_empty() {
            match human_conflict(&humans) {
                Some(conflict) => out.unresolved.push(conflict),
                None => out.sheets.push(humans[0].clone()),
            }
            continue;
        }
        if let Some(a) = group.iter().find(|s| s.rater == Rater::Auto) {
            out.sheets.push((*a).clone());
        }
    }
    out
}

/// Open and resolved disagreements for one case, per model.
pub fn case_conflicts(sheets: &[ScoreSheet]) -> Vec<ConsensusSheet> {
    by_pair(sheets)
        .into_values()
        .filter_map(|group| {
            let humans: Vec<&ScoreSheet> = group.iter().copied().filter(|s| s.rater.is_human()).collect();
            human_conflict(&humans)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crashviz_core::MetricId;

    fn sheet(rater: Rater, m5: bool) -> ScoreSheet {
        let mut s = ScoreSheet::new("case-001", "GPT-4o", rater);
        s.scores = [true; 10];
        s.set(MetricId::CollisionPointAccuracy, m5);
        s
    }

    #[test]
    fn precedence() {
        let auto = sheet(Rater::Auto, true);
        let alice = sheet(Rater::Human("alice".into()), true);
        let bob = sheet(Rater::Human("bob".into()), false);
        let consensus = sheet(Rater::Consensus, false);

        assert_eq!(select_sheets(std::slice::from_ref(&auto)).sheets, vec![auto.clone()]);
        assert_eq!(select_sheets(&[auto.clone(), alice.clone()]).sheets, vec![alice.clone()]);

        let open = select_sheets(&[auto.clone(), alice.clone(), bob.clone()]);
        assert!(open.sheets.is_empty());
        assert_eq!(open.unresolved.len(), 1);
        assert_eq!(open.unresolved[0].conflicts[0].metric, MetricId::CollisionPointAccuracy);

        let settled = select_sheets(&[auto, alice, bob, consensus.clone()]);
        assert_eq!(settled.sheets, vec![consensus]);
        assert!(settled.unresolved.is_empty());
    }
}
