//! Desk-scale synthetic corpus with a learnable image/text association.
//!
//! Every image shows two objects, each with a color, and the first object
//! performs an action. Regions are noisy sums of the object, color and action
//! embeddings; captions are template sentences naming exactly those words.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Caption, CorpusError, FeatureStore, ImageFeatures, Result};
use crate::seed::derive_rng;

pub const SYNTH_OBJECTS: &[&str] = &[
    "dog",
    "ball",
    "cat",
    "man",
    "woman",
    "horse",
    "car",
    "bus",
    "bird",
    "boat",
    "kite",
    "bench",
    "tree",
    "table",
    "chair",
    "pizza",
    "cake",
    "train",
    "truck",
    "bicycle",
    "umbrella",
    "clock",
    "sheep",
    "cow",
    "elephant",
    "zebra",
    "giraffe",
    "bear",
    "frisbee",
    "surfboard",
    "skateboard",
    "laptop",
    "phone",
    "vase",
    "bowl",
    "cup",
    "bottle",
    "couch",
    "bed",
    "boy",
];

pub const SYNTH_COLORS: &[&str] = &[
    "red", "blue", "green", "yellow", "black", "white", "brown", "orange", "pink", "gray",
];

pub const SYNTH_ACTIONS: &[&str] = &[
    "sitting", "running", "standing", "jumping", "sleeping", "eating", "walking", "playing",
];

// {s} subject, {sc} subject color, {a} action, {o} other object, {oc} its color.
const TEMPLATES: &[&str] = &[
    "a {sc} {s} {a} next to a {oc} {o} .",
    "a {oc} {o} and a {sc} {s} {a} together .",
    "there is a {sc} {s} {a} near the {oc} {o} .",
    "the {sc} {s} is {a} beside a {oc} {o} .",
    "a {oc} {o} behind a {sc} {s} {a} .",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_images: usize,
    pub n_objects_vocab: usize,
    pub regions_per_image: usize,
    pub d: usize,
    pub captions_per_image: usize,
    /// Standard deviation of the per-region Gaussian noise.
    #[serde(default = "default_noise")]
    pub noise: f32,
}

fn default_noise() -> f32 {
    0.3
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_images: 250,
            n_objects_vocab: 20,
            regions_per_image: 4,
            d: 64,
            captions_per_image: 5,
            noise: default_noise(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_images", self.n_images),
            ("n_objects_vocab", self.n_objects_vocab),
            ("regions_per_image", self.regions_per_image),
            ("d", self.d),
            ("captions_per_image", self.captions_per_image),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(CorpusError::Invalid(format!("{name} must be at least 1")));
        }
        if self.n_objects_vocab > SYNTH_OBJECTS.len() {
            return Err(CorpusError::Invalid(format!(
                "n_objects_vocab {} exceeds the {} built-in object words",
                self.n_objects_vocab,
                SYNTH_OBJECTS.len()
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(CorpusError::Invalid("noise must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Ground truth of one synthetic image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub image_id: String,
    pub subject: String,
    pub subject_color: String,
    pub action: String,
    pub other: String,
    pub other_color: String,
}

impl SceneSpec {
    pub fn objects(&self) -> [&str; 2] {
        [&self.subject, &self.other]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub store: FeatureStore,
    pub captions: Vec<Caption>,
    pub scenes: Vec<SceneSpec>,
}

fn gaussian_vec(rng: &mut impl Rng, d: usize, scale: f32) -> Vec<f32> {
    (0..d).map(|_| rng.sample::<f32, _>(StandardNormal) * scale).collect()
}

/// Generates images and captions; identical `(config, seed)` gives identical output.
pub fn generate_synthetic_corpus(config: &SynthConfig, seed: u64) -> Result<SyntheticCorpus> {
    config.validate()?;
    let d = config.d;
    let mut rng = derive_rng(seed, "synth-corpus", 0);

    let objects = &SYNTH_OBJECTS[..config.n_objects_vocab];
    let object_emb: Vec<Vec<f32>> = objects.iter().map(|_| gaussian_vec(&mut rng, d, 1.0)).collect();
    let color_emb: Vec<Vec<f32>> = SYNTH_COLORS.iter().map(|_| gaussian_vec(&mut rng, d, 0.7)).collect();
    let action_emb: Vec<Vec<f32>> = SYNTH_ACTIONS.iter().map(|_| gaussian_vec(&mut rng, d, 0.7)).collect();

    let mut store = FeatureStore::new(d);
    let mut captions = Vec::with_capacity(config.n_images * config.captions_per_image);
    let mut scenes = Vec::with_capacity(config.n_images);
    let width = config.n_images.to_string().len().max(5);

    for i in 0..config.n_images {
        let image_id = format!("img{i:0width$}");
        let picked: Vec<usize> = if objects.len() >= 2 {
            rand::seq::index::sample(&mut rng, objects.len(), 2).into_vec()
        } else {
            vec![0, 0]
        };
        let colors = [
            rng.gen_range(0..SYNTH_COLORS.len()),
            rng.gen_range(0..SYNTH_COLORS.len()),
        ];
        let action = rng.gen_range(0..SYNTH_ACTIONS.len());

        let n = config.regions_per_image;
        let mut regions = Array2::<f32>::zeros((n, d));
        let mut boxes = Array2::<f32>::zeros((n, 4));
        for j in 0..n {
            let slot = j % 2;
            let noise = gaussian_vec(&mut rng, d, config.noise);
            for k in 0..d {
                let mut v = object_emb[picked[slot]][k] + color_emb[colors[slot]][k] + noise[k];
                if slot == 0 {
                    v += action_emb[action][k];
                }
                regions[[j, k]] = v;
            }
            let (x1, x2) = ordered_pair(&mut rng);
            let (y1, y2) = ordered_pair(&mut rng);
            boxes.row_mut(j).assign(&ndarray::arr1(&[x1, y1, x2, y2]));
        }
        store.insert(ImageFeatures::new(image_id.clone(), regions, boxes)?)?;

        let scene = SceneSpec {
            image_id: image_id.clone(),
            subject: objects[picked[0]].to_string(),
            subject_color: SYNTH_COLORS[colors[0]].to_string(),
            action: SYNTH_ACTIONS[action].to_string(),
            other: objects[picked[1]].to_string(),
            other_color: SYNTH_COLORS[colors[1]].to_string(),
        };
        let mut order: Vec<usize> = (0..TEMPLATES.len()).collect();
        order.shuffle(&mut rng);
        for c in 0..config.captions_per_image {
            let text = TEMPLATES[order[c % order.len()]]
                .replace("{sc}", &scene.subject_color)
                .replace("{oc}", &scene.other_color)
                .replace("{s}", &scene.subject)
                .replace("{o}", &scene.other)
                .replace("{a}", &scene.action);
            captions.push(Caption::new(format!("{image_id}-c{c}"), image_id.clone(), text)?);
        }
        scenes.push(scene);
    }

    Ok(SyntheticCorpus {
        store,
        captions,
        scenes,
    })
}

fn ordered_pair(rng: &mut impl Rng) -> (f32, f32) {
    let a: f32 = rng.gen();
    let b: f32 = rng.gen();
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}
