//! The tribe-building loop without a UI: keywords, ranked candidates,
//! KEEP/REJECT, then the hashtag cloud and leader network of each tribe.
//!
//! `cargo run --example build_tribes`

use chrono::Utc;
use tribeforge::corpus::{generate_synthetic, tribe_token, SynthConfig};
use tribeforge::tribecraft::{
    hashtag_cloud, leader_network, search_candidates, Decision, MacroCategory, SearchWeights, TribeProject, Verdict,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (corpus, truth) = generate_synthetic(&SynthConfig {
        n_tribes: 3,
        users_per_tribe: 30,
        ..SynthConfig::default()
    })?;
    let mut project = TribeProject::new("demo", MacroCategory::synthetic(3))?;
    let tribes: Vec<String> = project.macro_category.tribe_ids().map(String::from).collect();

    for (k, tribe) in tribes.iter().enumerate() {
        project.set_keywords(tribe, &[tribe_token(k, 0), tribe_token(k, 1)])?;
        // two review rounds; the second benefits from follower/friend overlap
        for round in 0..2 {
            let leaders = project.leaders(tribe).cloned().unwrap_or_default();
            let ranked = search_candidates(&corpus, project.keywords(tribe), &leaders, SearchWeights::default(), 20)?;
            let fresh: Vec<_> = ranked.iter().filter(|c| !project.decided_users(tribe).contains(c.user_id.as_str())).take(5).collect();
            for c in fresh {
                // stand-in for the human reviewer: accept users of the planted tribe
                let verdict = if truth[&c.user_id] == k { Verdict::Keep } else { Verdict::Reject };
                project.record_decision(Decision {
                    user_id: c.user_id.clone(),
                    tribe_id: tribe.clone(),
                    verdict,
                    timestamp: Utc::now(),
                    actor: "example".into(),
                    request_key: None,
                })?;
                println!("round {round} {tribe}: {:?} {} (score {:.3})", verdict, c.user_id, c.combined);
            }
        }
    }

    for tribe in &tribes {
        let leaders = project.leaders(tribe).cloned().unwrap_or_default();
        let cloud = hashtag_cloud(&corpus, &leaders);
        let net = leader_network(&corpus, &leaders);
        let top: Vec<String> = cloud.iter().take(5).map(ToString::to_string).collect();
        println!("{tribe}: {} leaders, {} edges, top hashtags {}", leaders.len(), net.edges.len(), top.join(" "));
    }
    Ok(())
}
