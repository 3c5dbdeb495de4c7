//! Staged pipeline over persisted artifacts. Every stage is a pure function
//! of (inputs on disk, config, seed); re-running a stage reproduces its
//! outputs byte for byte. A manifest records the config hash, master seed,
//! and per-stage wall-clock time.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cluster::{elbow_select_k, kmeans, Clustering};
use crate::config::PipelineConfig;
use crate::embed::{
    hope::{default_beta, hope_embed},
    node2vec_embed,
    spectral::spectral_embed,
    Embedding, Method,
};
use crate::error::{Error, Result};
use crate::eval::{reports_to_csv, save_reports_json, sweep_recommendation_count, EvalReport};
use crate::hybrid::{
    build_hybrid_dataset, fit_linear_blend, predict_hybrid, save_loss_trace, train_mlp,
    HybridSummary,
};
use crate::ingest::{
    build_ratings_table, filter_active_users, parse_dataset, FriendshipList, RatingsTable,
};
use crate::numerics::matrix::DenseMatrix;
use crate::recommend::{
    eligible_recommenders, load_recommendations, recommend_for_user, save_recommendations,
    select_top_users, GroundTruth, WeightedRecommendations,
};
use crate::socialgraph::{build_weighted_graph, graph_stats, WeightedGraph};
use crate::types::{BusinessId, UserId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Graph,
    Embed,
    Cluster,
    Recommend,
    Hybrid,
    Evaluate,
    All,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Recommend => "recommend",
            Stage::Hybrid => "hybrid",
            Stage::Evaluate => "evaluate",
            Stage::All => "all",
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ingest" => Ok(Stage::Ingest),
            "graph" => Ok(Stage::Graph),
            "embed" => Ok(Stage::Embed),
            "cluster" => Ok(Stage::Cluster),
            "recommend" => Ok(Stage::Recommend),
            "hybrid" => Ok(Stage::Hybrid),
            "evaluate" => Ok(Stage::Evaluate),
            "all" => Ok(Stage::All),
            other => Err(format!("unknown stage `{other}`")),
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Stable per-stage seed derived from the master seed and stage name, so
/// any stage can be re-run independently with the same randomness.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    crate::numerics::rng::Rng::substream(master, fnv1a(stage)).next_u64()
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    config_hash: String,
    seed: u64,
    /// stage name -> wall-clock seconds of the latest run
    stages: BTreeMap<String, f64>,
}

fn update_manifest(config: &PipelineConfig, stage: &str, seconds: f64) -> Result<()> {
    let path = config.out_dir.join("manifest.json");
    let mut manifest = if path.exists() {
        serde_json::from_str(&std::fs::read_to_string(&path)?)?
    } else {
        Manifest::default()
    };
    manifest.config_hash = config.hash();
    manifest.seed = config.seed;
    manifest.stages.insert(stage.to_string(), seconds);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn artifact(config: &PipelineConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(path))
    }
}

fn methods_to_run(method: Option<Method>) -> Vec<Method> {
    method.map(|m| vec![m]).unwrap_or_else(|| Method::ALL.to_vec())
}

/// Runs one stage (or the whole chain) against the artifact directory.
pub fn run_stage(stage: Stage, config: &PipelineConfig, method: Option<Method>) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)?;
    if stage == Stage::All {
        for s in [
            Stage::Ingest,
            Stage::Graph,
            Stage::Embed,
            Stage::Cluster,
            Stage::Recommend,
            Stage::Hybrid,
            Stage::Evaluate,
        ] {
            run_stage(s, config, method)?;
        }
        return Ok(());
    }
    let start = Instant::now();
    match stage {
        Stage::Ingest => stage_ingest(config)?,
        Stage::Graph => stage_graph(config)?,
        Stage::Embed => stage_embed(config, method)?,
        Stage::Cluster => stage_cluster(config, method)?,
        Stage::Recommend => stage_recommend(config, method)?,
        Stage::Hybrid => stage_hybrid(config)?,
        Stage::Evaluate => stage_evaluate(config)?,
        Stage::All => unreachable!(),
    }
    update_manifest(config, stage.name(), start.elapsed().as_secs_f64())
}

fn stage_ingest(config: &PipelineConfig) -> Result<()> {
    let (reviews, friendships) = parse_dataset(&config.reviews_path, &config.friends_path)?;
    let active = filter_active_users(&reviews, &friendships, config.min_reviews)?;
    let ratings = build_ratings_table(&reviews, &active, config.high_stars, config.low_stars);
    ratings.save(&artifact(config, "ratings.json"))?;
    let names: Vec<&str> = active.iter().map(|u| u.as_str()).collect();
    std::fs::write(
        artifact(config, "active_users.json"),
        serde_json::to_string_pretty(&names)?,
    )?;
    let mut pairs = String::new();
    for (a, b) in friendships.iter() {
        pairs.push_str(&format!("{}\t{}\n", a.as_str(), b.as_str()));
    }
    std::fs::write(artifact(config, "friend_pairs.tsv"), pairs)?;
    Ok(())
}

fn load_ingest_artifacts(
    config: &PipelineConfig,
) -> Result<(RatingsTable, BTreeSet<UserId>, FriendshipList)> {
    let ratings = RatingsTable::load(
        &require(artifact(config, "ratings.json"))?,
        config.high_stars,
        config.low_stars,
    )?;
    let active_raw: Vec<String> =
        serde_json::from_str(&std::fs::read_to_string(require(artifact(
            config,
            "active_users.json",
        ))?)?)?;
    let active: BTreeSet<UserId> = active_raw.into_iter().map(UserId).collect();
    let pair_text = std::fs::read_to_string(require(artifact(config, "friend_pairs.tsv"))?)?;
    let mut friendships = FriendshipList::new();
    for (idx, line) in pair_text.lines().enumerate() {
        let (a, b) = line.split_once('\t').ok_or_else(|| Error::MalformedLine {
            line: idx + 1,
            msg: "expected `user<TAB>user`".into(),
        })?;
        friendships.insert(UserId::new(a), UserId::new(b));
    }
    Ok((ratings, active, friendships))
}

fn stage_graph(config: &PipelineConfig) -> Result<()> {
    let (ratings, active, friendships) = load_ingest_artifacts(config)?;
    let graph = build_weighted_graph(&friendships, &ratings, &active, config.epsilon)?;
    graph.save_tsv(&artifact(config, "graph.tsv"))?;
    let stats = graph_stats(&graph);
    std::fs::write(
        artifact(config, "graph_stats.json"),
        serde_json::to_string_pretty(&stats)?,
    )?;
    Ok(())
}

fn load_graph(config: &PipelineConfig) -> Result<WeightedGraph> {
    WeightedGraph::load_tsv(&require(artifact(config, "graph.tsv"))?)
}

fn stage_embed(config: &PipelineConfig, method: Option<Method>) -> Result<()> {
    let graph = load_graph(config)?;
    for m in methods_to_run(method) {
        let embedding = match m {
            Method::Node2vec => node2vec_embed(
                &graph,
                config.node2vec_dim.unwrap_or(config.dim),
                &config.node2vec,
                stage_seed(config.seed, "embed.node2vec"),
            )?,
            Method::Spectral => spectral_embed(
                &graph,
                config.spectral_dim.unwrap_or(config.dim),
                config.spectral_strict,
            )?,
            Method::Hope => {
                let beta = config.hope_beta.unwrap_or_else(|| default_beta(&graph));
                hope_embed(&graph, config.hope_dim.unwrap_or(config.dim), beta)?
            }
        };
        embedding.save_csv(&artifact(config, &format!("embedding_{}.csv", m.name())))?;
    }
    Ok(())
}

fn load_embedding(config: &PipelineConfig, m: Method) -> Result<Embedding> {
    Embedding::load_csv(
        m,
        &require(artifact(config, &format!("embedding_{}.csv", m.name())))?,
    )
}

fn stage_cluster(config: &PipelineConfig, method: Option<Method>) -> Result<()> {
    let meta_path = artifact(config, "cluster_meta.json");
    let mut meta: BTreeMap<String, serde_json::Value> = if meta_path.exists() {
        serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?
    } else {
        BTreeMap::new()
    };
    for m in methods_to_run(method) {
        let embedding = load_embedding(config, m)?;
        let seed = stage_seed(config.seed, &format!("cluster.{}", m.name()));
        let k = elbow_select_k(
            &embedding.vectors,
            config.k_min,
            config.k_max,
            config.kmeans_max_iter,
            seed,
        )?;
        let clustering = kmeans(&embedding.vectors, k, config.kmeans_max_iter, seed)?;
        clustering.save_csv(
            embedding.ids(),
            &artifact(config, &format!("assignments_{}.csv", m.name())),
        )?;
        clustering
            .centroids
            .save_csv(&artifact(config, &format!("centroids_{}.csv", m.name())))?;
        meta.insert(
            m.name().to_string(),
            serde_json::json!({ "k": k, "inertia": clustering.inertia }),
        );
    }
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn load_clustering(config: &PipelineConfig, m: Method) -> Result<Clustering> {
    let centroids = DenseMatrix::load_csv(&require(artifact(
        config,
        &format!("centroids_{}.csv", m.name()),
    ))?)?;
    let (_, clustering) = Clustering::load_csv(
        &require(artifact(config, &format!("assignments_{}.csv", m.name())))?,
        centroids,
    )?;
    Ok(clustering)
}

fn stage_recommend(config: &PipelineConfig, method: Option<Method>) -> Result<()> {
    let graph = load_graph(config)?;
    let (ratings, _, _) = load_ingest_artifacts(config)?;
    let truth = GroundTruth::from_ratings(&ratings);
    let cohort = select_top_users(&graph, config.cohort_size.min(graph.n()));
    let names: Vec<&str> = cohort.iter().map(|u| u.as_str()).collect();
    std::fs::write(
        artifact(config, "cohort.json"),
        serde_json::to_string_pretty(&names)?,
    )?;
    let eligible = eligible_recommenders(
        &truth,
        config.eligibility_lower,
        config.eligibility_upper,
    );
    for m in methods_to_run(method) {
        let embedding = load_embedding(config, m)?;
        let clustering = load_clustering(config, m)?;
        let mut recs = BTreeMap::new();
        for user in &cohort {
            let rec = recommend_for_user(
                user,
                &embedding,
                &clustering,
                &truth,
                &eligible,
                config.n_neighbors,
                config.rec_list_len,
                config.exclude_own,
            )?;
            recs.insert(user.clone(), rec);
        }
        save_recommendations(&recs, &artifact(config, &format!("recs_{}.json", m.name())))?;
    }
    Ok(())
}

fn load_cohort(config: &PipelineConfig) -> Result<Vec<UserId>> {
    let raw: Vec<String> = serde_json::from_str(&std::fs::read_to_string(require(artifact(
        config,
        "cohort.json",
    ))?)?)?;
    Ok(raw.into_iter().map(UserId).collect())
}

fn load_recs(
    config: &PipelineConfig,
    name: &str,
) -> Result<BTreeMap<UserId, WeightedRecommendations>> {
    load_recommendations(&require(artifact(config, &format!("recs_{name}.json")))?)
}

fn stage_hybrid(config: &PipelineConfig) -> Result<()> {
    let (ratings, _, _) = load_ingest_artifacts(config)?;
    let truth = GroundTruth::from_ratings(&ratings);
    let cohort = load_cohort(config)?;
    let hope = load_recs(config, "hope")?;
    let spectral = load_recs(config, "spectral")?;
    let node2vec = load_recs(config, "node2vec")?;
    let dataset = build_hybrid_dataset(
        &cohort,
        [&hope, &spectral, &node2vec],
        &truth,
        config.hybrid.binarize,
    )?;
    let seed = stage_seed(config.seed, "hybrid");
    let trained = train_mlp(
        &dataset,
        config.hybrid.split_ratio,
        config.hybrid.epochs,
        config.hybrid.lr,
        seed,
    )?;
    let blend = fit_linear_blend(&dataset, config.hybrid.blend_epochs, config.hybrid.blend_lr);

    trained.model.save(&artifact(config, "mlp"))?;
    save_loss_trace(&trained.loss_trace, &artifact(config, "mlp_loss.csv"))?;

    let list_len = config.rec_list_len.min(dataset.n_restaurants());
    let mut recs = BTreeMap::new();
    for (i, user) in dataset.users.iter().enumerate() {
        let ranked = predict_hybrid(&trained.model, dataset.x.row(i), &dataset.restaurants, list_len);
        let items: Vec<(BusinessId, u32)> = ranked
            .into_iter()
            .enumerate()
            .map(|(rank, b)| (b, (list_len - rank) as u32))
            .collect();
        recs.insert(
            user.clone(),
            WeightedRecommendations {
                user: user.clone(),
                items,
            },
        );
    }
    save_recommendations(&recs, &artifact(config, "recs_hybrid.json"))?;

    let summary = HybridSummary {
        restaurants: dataset.restaurants.clone(),
        users: dataset.users.clone(),
        train_users: trained
            .train_rows
            .iter()
            .map(|&i| dataset.users[i].clone())
            .collect(),
        test_users: trained
            .test_rows
            .iter()
            .map(|&i| dataset.users[i].clone())
            .collect(),
        blend_weights: blend,
        final_train_loss: trained.loss_trace.last().map(|t| t.0).unwrap_or(f64::NAN),
        final_test_loss: trained.loss_trace.last().map(|t| t.1).unwrap_or(f64::NAN),
    };
    std::fs::write(
        artifact(config, "hybrid_summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(())
}

fn stage_evaluate(config: &PipelineConfig) -> Result<()> {
    let (ratings, _, _) = load_ingest_artifacts(config)?;
    let truth = GroundTruth::from_ratings(&ratings);
    let mut reports: Vec<EvalReport> = Vec::new();
    for m in Method::ALL {
        let recs = load_recs(config, m.name())?;
        reports.extend(sweep_recommendation_count(
            m.name(),
            &recs,
            &truth,
            &config.eval_ks,
        )?);
    }
    let hybrid_recs = load_recs(config, "hybrid")?;
    let summary: HybridSummary = serde_json::from_str(&std::fs::read_to_string(require(
        artifact(config, "hybrid_summary.json"),
    )?)?)?;
    for (tag, users) in [
        ("hybrid_train", &summary.train_users),
        ("hybrid_test", &summary.test_users),
    ] {
        let subset: BTreeMap<UserId, WeightedRecommendations> = users
            .iter()
            .filter_map(|u| hybrid_recs.get(u).map(|r| (u.clone(), r.clone())))
            .collect();
        reports.extend(sweep_recommendation_count(tag, &subset, &truth, &config.eval_ks)?);
    }
    save_reports_json(&reports, &artifact(config, "eval.json"))?;
    std::fs::write(artifact(config, "eval.csv"), reports_to_csv(&reports))?;
    Ok(())
}
