//! Digit corpus handling: train/experiment split, label adulteration and sampling.
//!
//! Pixel ingestion lives in the std companion crate; everything here works on decoded
//! instances and label vectors.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use crate::rng::seeded;

pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
pub const NUM_CLASSES: usize = 10;

/// A digit class, `0..=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Digit(u8);

impl Digit {
    pub fn new(v: u8) -> Option<Self> {
        (v < NUM_CLASSES as u8).then_some(Self(v))
    }

    #[inline]
    pub fn get(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl core::fmt::Display for Digit {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("empty pool")]
    Empty,
    #[error("cannot halve an odd number of instances ({0})")]
    OddCount(usize),
    #[error("instance {id}: {what}")]
    Instance { id: usize, what: &'static str },
    #[error("pool has {labels} labels for {ids} ids")]
    Length { ids: usize, labels: usize },
}

/// One grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageInstance {
    pub id: usize,
    pub pixels: Vec<f64>,
    pub true_label: Digit,
}

impl ImageInstance {
    pub fn new(id: usize, pixels: Vec<f64>, true_label: Digit) -> Result<Self, DatasetError> {
        if pixels.len() != IMAGE_PIXELS {
            return Err(DatasetError::Instance {
                id,
                what: "expected 784 pixels",
            });
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(DatasetError::Instance {
                id,
                what: "pixel outside [0, 1]",
            });
        }
        Ok(Self {
            id,
            pixels,
            true_label,
        })
    }
}

/// Id sets of the training-corpus halves and of the test corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub pretrain_ids: Vec<usize>,
    pub experiment_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub seed: u64,
}

/// Seeded random halving of `train`; every test instance is kept for assessment.
pub fn split(
    train: &[ImageInstance],
    test: &[ImageInstance],
    seed: u64,
) -> Result<SplitSpec, DatasetError> {
    split_ids(
        &train.iter().map(|i| i.id).collect::<Vec<_>>(),
        test.iter().map(|i| i.id).collect(),
        seed,
    )
}

pub fn split_ids(
    train_ids: &[usize],
    test_ids: Vec<usize>,
    seed: u64,
) -> Result<SplitSpec, DatasetError> {
    let n = train_ids.len();
    if !n.is_multiple_of(2) {
        return Err(DatasetError::OddCount(n));
    }
    let mut rng = seeded(seed);
    let order = index::sample(&mut rng, n, n).into_vec();
    let (a, b) = order.split_at(n / 2);
    let mut pretrain_ids: Vec<usize> = a.iter().map(|&i| train_ids[i]).collect();
    let mut experiment_ids: Vec<usize> = b.iter().map(|&i| train_ids[i]).collect();
    pretrain_ids.sort_unstable();
    experiment_ids.sort_unstable();
    Ok(SplitSpec {
        pretrain_ids,
        experiment_ids,
        test_ids,
        seed,
    })
}

/// Experiment-pool labels. Positions `0..len` index `ids`, `true_labels` and
/// `assigned_labels` in lockstep; pixels stay in the corpus and are looked up by id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPool {
    ids: Vec<usize>,
    true_labels: Vec<Digit>,
    assigned_labels: Vec<Digit>,
    adulteration_seed: Option<u64>,
    by_assigned: [Vec<u32>; NUM_CLASSES],
}

impl LabeledPool {
    /// A clean pool: assigned labels equal true labels.
    pub fn new(ids: Vec<usize>, true_labels: Vec<Digit>) -> Result<Self, DatasetError> {
        if ids.len() != true_labels.len() {
            return Err(DatasetError::Length {
                ids: ids.len(),
                labels: true_labels.len(),
            });
        }
        let assigned = true_labels.clone();
        let mut pool = Self {
            ids,
            true_labels,
            assigned_labels: assigned,
            adulteration_seed: None,
            by_assigned: Default::default(),
        };
        pool.rebuild_index();
        Ok(pool)
    }

    pub fn from_instances<'a, I>(instances: I) -> Self
    where
        I: IntoIterator<Item = &'a ImageInstance>,
    {
        let (ids, labels) = instances.into_iter().map(|i| (i.id, i.true_label)).unzip();
        Self::new(ids, labels).expect("unzip keeps lengths equal")
    }

    fn rebuild_index(&mut self) {
        for bucket in &mut self.by_assigned {
            bucket.clear();
        }
        for (pos, d) in self.assigned_labels.iter().enumerate() {
            self.by_assigned[d.index()].push(pos as u32);
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn id(&self, pos: usize) -> usize {
        self.ids[pos]
    }

    pub fn true_label(&self, pos: usize) -> Digit {
        self.true_labels[pos]
    }

    pub fn assigned_label(&self, pos: usize) -> Digit {
        self.assigned_labels[pos]
    }

    pub fn true_labels(&self) -> &[Digit] {
        &self.true_labels
    }

    pub fn assigned_labels(&self) -> &[Digit] {
        &self.assigned_labels
    }

    pub fn adulteration_seed(&self) -> Option<u64> {
        self.adulteration_seed
    }

    /// Positions whose assigned label is `class`.
    pub fn positions_with_assigned(&self, class: Digit) -> &[u32] {
        &self.by_assigned[class.index()]
    }

    pub fn mismatches(&self) -> usize {
        self.true_labels
            .iter()
            .zip(&self.assigned_labels)
            .filter(|(t, a)| t != a)
            .count()
    }

    /// Re-adulterates in place, reusing buffers. See [`adulterate`].
    pub fn adulterate_in_place(&mut self, seed: u64) -> Result<(), DatasetError> {
        let n = self.len();
        if n == 0 {
            return Err(DatasetError::Empty);
        }
        self.assigned_labels.copy_from_slice(&self.true_labels);
        let mut rng = seeded(seed);
        for pos in index::sample(&mut rng, n, n / 2) {
            let truth = self.true_labels[pos].get();
            let offset = rng.random_range(1..NUM_CLASSES as u8);
            self.assigned_labels[pos] = Digit((truth + offset) % NUM_CLASSES as u8);
        }
        self.adulteration_seed = Some(seed);
        self.rebuild_index();
        Ok(())
    }
}

/// Exactly `⌊N/2⌋` uniformly chosen positions receive a uniformly random wrong digit; the
/// rest get their true label back. Always starts from the true labels.
pub fn adulterate(pool: &LabeledPool, seed: u64) -> Result<LabeledPool, DatasetError> {
    let mut out = pool.clone();
    out.adulterate_in_place(seed)?;
    Ok(out)
}

/// A uniformly drawn pool position with its assigned label.
pub fn sample_instance<R: Rng + ?Sized>(
    pool: &LabeledPool,
    rng: &mut R,
) -> Result<(usize, Digit), DatasetError> {
    if pool.is_empty() {
        return Err(DatasetError::Empty);
    }
    let pos = rng.random_range(0..pool.len());
    Ok((pos, pool.assigned_label(pos)))
}

/// Positions of a same-class batch.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BatchDraw {
    pub positions: Vec<usize>,
    /// Set when no member carried the requested label and the batch came from the whole pool.
    pub fallback: bool,
}

/// `size` positions drawn with replacement among members whose assigned label is `class`.
pub fn sample_batch_same_class<R: Rng + ?Sized>(
    pool: &LabeledPool,
    class: Digit,
    size: usize,
    rng: &mut R,
) -> Result<BatchDraw, DatasetError> {
    if size == 0 {
        return Ok(BatchDraw::default());
    }
    if pool.is_empty() {
        return Err(DatasetError::Empty);
    }
    let members = pool.positions_with_assigned(class);
    if members.is_empty() {
        let positions = (0..size).map(|_| rng.random_range(0..pool.len())).collect();
        return Ok(BatchDraw {
            positions,
            fallback: true,
        });
    }
    let positions = (0..size)
        .map(|_| members[rng.random_range(0..members.len())] as usize)
        .collect();
    Ok(BatchDraw {
        positions,
        fallback: false,
    })
}
