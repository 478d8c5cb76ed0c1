//! Truncation rules on hand-made signal histories.

use belief_trap::truncation::{
    cd_stall_rule, evaluate, random_beta_rule, streak_unknown_rule, t3_check, FeedbackLabel,
    RuleKind, TruncationRule, TurnSignal,
};

fn main() -> belief_trap::Result<()> {
    let history: Vec<TurnSignal> = [4.0, 2.0, 0.0, 0.0, 0.0]
        .iter()
        .map(|&d| TurnSignal::progress(d))
        .collect();
    for t in 1..=history.len() {
        println!("turn {t}: window rule {:?}", t3_check(&history, 3, 1.0, t)?);
    }
    println!("cd_stall {:?}", cd_stall_rule(&[60, 20, 20, 20, 20], 3));
    println!(
        "streak {:?}",
        streak_unknown_rule(&[FeedbackLabel::Unknown; 5], 5)
    );
    let hits = (0..1000)
        .filter(|&t| random_beta_rule(0.2, 9, t).is_truncate())
        .count();
    println!("random beta 0.2 fired on {hits} of 1000 turns");
    let rule = TruncationRule::of(RuleKind::CdStall);
    println!("dispatched cd_stall {:?}", evaluate(&rule, &history)?);
    Ok(())
}
