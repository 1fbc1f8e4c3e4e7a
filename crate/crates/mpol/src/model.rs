//! Frame-wise mask-estimation network with a hand-derived backward pass.
//!
//! The architecture is fixed: affine(F→H) → featurenorm → ReLU →
//! affine(H→H) → featurenorm → ReLU → affine(H→F, linear). Each frame is
//! processed independently, so a T×F input grid yields a T×F mask grid.
//!
//! Parameters live in one flat vector θ_t alongside an immutable source
//! snapshot θ₀. The adaptable subset — every featurenorm's gain/bias plus
//! the output affine — is the only part test-time adaptation may touch;
//! everything else must stay bit-identical to θ₀. [`MaskNet::backward`]
//! produces gradients for the adaptable subset only;
//! [`MaskNet::backward_full`] covers all parameters for source training.

use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};

/// Featurenorm variance epsilon. Small enough that the normalized output's
/// variance sits within 1e-5 of 1 for any reasonably scaled input frame.
pub const FNORM_EPS: f64 = 1e-8;

const MAGIC: &[u8; 4] = b"MPOL";
const FORMAT_VERSION: u16 = 1;
const KIND_AFFINE: u8 = 0;
const KIND_FEATURENORM: u8 = 1;

/// Flat-vector offsets for the fixed layer stack.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Layout {
    w1: Range<usize>,
    b1: Range<usize>,
    g1: Range<usize>,
    be1: Range<usize>,
    w2: Range<usize>,
    b2: Range<usize>,
    g2: Range<usize>,
    be2: Range<usize>,
    w3: Range<usize>,
    b3: Range<usize>,
    len: usize,
}

fn layout(f: usize, h: usize) -> Layout {
    let mut at = 0usize;
    let mut take = |n: usize| {
        let r = at..at + n;
        at += n;
        r
    };
    Layout {
        w1: take(h * f),
        b1: take(h),
        g1: take(h),
        be1: take(h),
        w2: take(h * h),
        b2: take(h),
        g2: take(h),
        be2: take(h),
        w3: take(f * h),
        b3: take(f),
        len: at,
    }
}

/// Gradient values paired with the parameter positions they belong to.
///
/// Positions are ascending; anything absent is implicitly zero (frozen
/// parameters never appear).
#[derive(Debug, Clone)]
pub struct Gradients {
    positions: Arc<[usize]>,
    values: Vec<f64>,
}

impl Gradients {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Gradient at a flat parameter position; `None` for frozen positions.
    pub fn get(&self, position: usize) -> Option<f64> {
        self.positions
            .binary_search(&position)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Shares the position set with optimizer state for alignment checks.
    pub fn positions_arc(&self) -> Arc<[usize]> {
        Arc::clone(&self.positions)
    }
}

/// Per-layer activations retained by [`MaskNet::forward`] for backward.
///
/// Stamped with the network's mutation counter; a backward call against a
/// network whose parameters changed since the forward pass is rejected.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    x: Grid,
    n1: Grid,
    inv_std1: Vec<f64>,
    r1: Grid,
    n2: Grid,
    inv_std2: Vec<f64>,
    r2: Grid,
}

impl ForwardCache {
    pub fn frames(&self) -> usize {
        self.x.frames()
    }
}

/// The mask-estimation network: flat parameters, source snapshot, and the
/// frozen/adaptable partition.
#[derive(Debug, Clone)]
pub struct MaskNet {
    in_dim: usize,
    hidden: usize,
    layout: Layout,
    theta: Vec<f64>,
    theta0: Vec<f64>,
    adaptable: Arc<[usize]>,
    version: u64,
}

impl MaskNet {
    /// Randomly initialized network: He-scaled hidden affines, Glorot-scaled
    /// output affine, unit gains and zero biases. Deterministic per seed.
    pub fn init_random(in_dim: usize, hidden: usize, seed: u64) -> Self {
        assert!(in_dim >= 1, "input dimension must be at least 1");
        assert!(hidden >= 2, "featurenorm needs at least 2 features");
        let lay = layout(in_dim, hidden);
        let mut theta = vec![0.0; lay.len];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut fill_normal = |range: Range<usize>, std: f64, theta: &mut [f64]| {
            let dist = Normal::new(0.0, std).expect("std is finite and positive");
            for slot in &mut theta[range] {
                *slot = dist.sample(&mut rng);
            }
        };
        fill_normal(lay.w1.clone(), (2.0 / in_dim as f64).sqrt(), &mut theta);
        fill_normal(lay.w2.clone(), (2.0 / hidden as f64).sqrt(), &mut theta);
        fill_normal(
            lay.w3.clone(),
            (2.0 / (hidden + in_dim) as f64).sqrt(),
            &mut theta,
        );
        theta[lay.g1.clone()].fill(1.0);
        theta[lay.g2.clone()].fill(1.0);
        // b1, b2, be1, be2, b3 stay zero.

        let adaptable: Vec<usize> = lay
            .g1
            .clone()
            .chain(lay.be1.clone())
            .chain(lay.g2.clone())
            .chain(lay.be2.clone())
            .chain(lay.w3.clone())
            .chain(lay.b3.clone())
            .collect();

        Self {
            in_dim,
            hidden,
            layout: lay,
            theta0: theta.clone(),
            theta,
            adaptable: adaptable.into(),
            version: 0,
        }
    }

    /// The reference configuration: 256 hidden units.
    pub fn reference(in_dim: usize, seed: u64) -> Self {
        Self::init_random(in_dim, 256, seed)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn param_len(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    /// Ascending flat positions of the adaptable parameters (featurenorm
    /// gains/biases and the output affine).
    pub fn adaptable_positions(&self) -> Arc<[usize]> {
        Arc::clone(&self.adaptable)
    }

    /// All parameter positions; used when training touches everything.
    pub fn all_positions(&self) -> Arc<[usize]> {
        (0..self.theta.len()).collect::<Vec<_>>().into()
    }

    /// Mutation counter; bumped by every parameter write.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn param(&self, position: usize) -> f64 {
        self.theta[position]
    }

    /// Writes one parameter. Callers stepping frozen positions are on their
    /// own to restore them; the adaptation path never does.
    pub fn set_param(&mut self, position: usize, value: f64) {
        self.theta[position] = value;
        self.version += 1;
    }

    /// Bulk parameter write used by the optimizer and the ensembling step.
    pub fn write_positions(&mut self, positions: &[usize], values: &[f64]) -> Result<()> {
        if positions.len() != values.len() {
            return Err(Error::ShapeMismatch {
                expected: positions.len().to_string(),
                got: values.len().to_string(),
            });
        }
        for (&p, &v) in positions.iter().zip(values) {
            self.theta[p] = v;
        }
        self.version += 1;
        Ok(())
    }

    /// Re-bases the source snapshot θ₀ on the current parameters; called
    /// once when source training finishes.
    pub fn snapshot_as_source(&mut self) {
        self.theta0.copy_from_slice(&self.theta);
        self.version += 1;
    }

    /// Frame-wise forward pass over log-magnitude features.
    ///
    /// Returns the raw (unbounded, possibly negative) mask and the cache
    /// backward needs.
    pub fn forward(&self, log_mag: &Grid) -> Result<(Mask, ForwardCache)> {
        if log_mag.bins() != self.in_dim {
            return Err(Error::ShapeMismatch {
                expected: format!("frames x {}", self.in_dim),
                got: format!("{:?}", log_mag.shape()),
            });
        }
        let t = log_mag.frames();
        let (f, h) = (self.in_dim, self.hidden);
        let lay = &self.layout;
        let th = &self.theta;

        let mut mask = Grid::zeros(t, f);
        let mut n1 = Grid::zeros(t, h);
        let mut r1 = Grid::zeros(t, h);
        let mut n2 = Grid::zeros(t, h);
        let mut r2 = Grid::zeros(t, h);
        let mut inv_std1 = vec![0.0; t];
        let mut inv_std2 = vec![0.0; t];
        let mut a = vec![0.0; h];

        for frame in 0..t {
            let x = log_mag.row(frame);

            for o in 0..h {
                a[o] = th[lay.b1.start + o] + dot(&th[lay.w1.start + o * f..lay.w1.start + (o + 1) * f], x);
            }
            inv_std1[frame] = normalize(&a, n1.row_mut(frame));
            relu_affine(
                n1.row(frame),
                &th[lay.g1.clone()],
                &th[lay.be1.clone()],
                r1.row_mut(frame),
            );

            {
                let rin = r1.row(frame);
                for o in 0..h {
                    a[o] = th[lay.b2.start + o]
                        + dot(&th[lay.w2.start + o * h..lay.w2.start + (o + 1) * h], rin);
                }
            }
            inv_std2[frame] = normalize(&a, n2.row_mut(frame));
            relu_affine(
                n2.row(frame),
                &th[lay.g2.clone()],
                &th[lay.be2.clone()],
                r2.row_mut(frame),
            );

            let rin = r2.row(frame);
            let out = mask.row_mut(frame);
            for o in 0..f {
                out[o] = th[lay.b3.start + o]
                    + dot(&th[lay.w3.start + o * h..lay.w3.start + (o + 1) * h], rin);
            }
        }

        let cache = ForwardCache {
            version: self.version,
            x: log_mag.clone(),
            n1,
            inv_std1,
            r1,
            n2,
            inv_std2,
            r2,
        };
        Ok((mask, cache))
    }

    /// Gradients of a scalar loss w.r.t. the adaptable parameters, given
    /// dL/dmask. Frozen parameters receive no entry.
    pub fn backward(&self, cache: &ForwardCache, d_mask: &Grid) -> Result<Gradients> {
        let dense = self.backward_dense(cache, d_mask, false)?;
        Ok(Gradients {
            values: self.adaptable.iter().map(|&p| dense[p]).collect(),
            positions: Arc::clone(&self.adaptable),
        })
    }

    /// Gradients w.r.t. every parameter; the source-training path.
    pub fn backward_full(&self, cache: &ForwardCache, d_mask: &Grid) -> Result<Gradients> {
        let dense = self.backward_dense(cache, d_mask, true)?;
        Ok(Gradients {
            positions: self.all_positions(),
            values: dense,
        })
    }

    fn check_cache(&self, cache: &ForwardCache, d_mask: &Grid) -> Result<()> {
        if cache.version != self.version {
            return Err(Error::CacheMismatch(format!(
                "cache built at parameter version {}, network is at {}",
                cache.version, self.version
            )));
        }
        if cache.x.bins() != self.in_dim || cache.n1.bins() != self.hidden {
            return Err(Error::CacheMismatch(format!(
                "cache dims {}x{} do not match network {}x{}",
                cache.x.bins(),
                cache.n1.bins(),
                self.in_dim,
                self.hidden
            )));
        }
        if d_mask.shape() != (cache.x.frames(), self.in_dim) {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", (cache.x.frames(), self.in_dim)),
                got: format!("{:?}", d_mask.shape()),
            });
        }
        Ok(())
    }

    fn backward_dense(&self, cache: &ForwardCache, d_mask: &Grid, full: bool) -> Result<Vec<f64>> {
        self.check_cache(cache, d_mask)?;
        let t = cache.x.frames();
        let (f, h) = (self.in_dim, self.hidden);
        let lay = &self.layout;
        let th = &self.theta;

        let mut grad = vec![0.0; lay.len];
        let mut dr2 = vec![0.0; h];
        let mut dz2 = vec![0.0; h];
        let mut da2 = vec![0.0; h];
        let mut dr1 = vec![0.0; h];
        let mut dz1 = vec![0.0; h];
        let mut da1 = vec![0.0; h];

        for frame in 0..t {
            let dm = d_mask.row(frame);
            let r2 = cache.r2.row(frame);
            let n2 = cache.n2.row(frame);
            let r1 = cache.r1.row(frame);
            let n1 = cache.n1.row(frame);

            // Output affine: dW3 = dm ⊗ r2, db3 = dm, dr2 = W3ᵀ dm.
            dr2.fill(0.0);
            for o in 0..f {
                let g = dm[o];
                if g == 0.0 {
                    continue;
                }
                grad[lay.b3.start + o] += g;
                let wrow = &th[lay.w3.start + o * h..lay.w3.start + (o + 1) * h];
                let grow = &mut grad[lay.w3.start + o * h..lay.w3.start + (o + 1) * h];
                for i in 0..h {
                    grow[i] += g * r2[i];
                    dr2[i] += g * wrow[i];
                }
            }

            // ReLU: pass where the activation survived (z > 0 ⇔ r > 0).
            for i in 0..h {
                dz2[i] = if r2[i] > 0.0 { dr2[i] } else { 0.0 };
            }

            // featurenorm 2: parameter grads, then input grad.
            for i in 0..h {
                grad[lay.g2.start + i] += dz2[i] * n2[i];
                grad[lay.be2.start + i] += dz2[i];
            }
            norm_input_grad(&dz2, n2, &th[lay.g2.clone()], cache.inv_std2[frame], &mut da2);

            // Hidden affine: dr1 = W2ᵀ da2 (weights frozen unless full).
            dr1.fill(0.0);
            for o in 0..h {
                let g = da2[o];
                if g == 0.0 {
                    continue;
                }
                let wrow = &th[lay.w2.start + o * h..lay.w2.start + (o + 1) * h];
                for i in 0..h {
                    dr1[i] += g * wrow[i];
                }
                if full {
                    grad[lay.b2.start + o] += g;
                    let grow = &mut grad[lay.w2.start + o * h..lay.w2.start + (o + 1) * h];
                    for i in 0..h {
                        grow[i] += g * r1[i];
                    }
                }
            }

            for i in 0..h {
                dz1[i] = if r1[i] > 0.0 { dr1[i] } else { 0.0 };
            }

            // featurenorm 1 parameter grads complete the adaptable set.
            for i in 0..h {
                grad[lay.g1.start + i] += dz1[i] * n1[i];
                grad[lay.be1.start + i] += dz1[i];
            }

            if full {
                norm_input_grad(&dz1, n1, &th[lay.g1.clone()], cache.inv_std1[frame], &mut da1);
                let x = cache.x.row(frame);
                for o in 0..h {
                    let g = da1[o];
                    if g == 0.0 {
                        continue;
                    }
                    grad[lay.b1.start + o] += g;
                    let grow = &mut grad[lay.w1.start + o * f..lay.w1.start + (o + 1) * f];
                    for i in 0..f {
                        grow[i] += g * x[i];
                    }
                }
            }
        }

        Ok(grad)
    }

    /// Serializes θ_t to the binary parameter container.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 + self.theta.len() * 8);
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        bytes.extend_from_slice(&5u16.to_le_bytes());

        let lay = &self.layout;
        let affine = |bytes: &mut Vec<u8>, out: usize, input: usize, w: Range<usize>, b: Range<usize>| {
            bytes.push(KIND_AFFINE);
            bytes.extend_from_slice(&(out as u32).to_le_bytes());
            bytes.extend_from_slice(&(input as u32).to_le_bytes());
            for &v in &self.theta[w] {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            for &v in &self.theta[b] {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        };
        let fnorm = |bytes: &mut Vec<u8>, n: usize, g: Range<usize>, be: Range<usize>| {
            bytes.push(KIND_FEATURENORM);
            bytes.extend_from_slice(&(n as u32).to_le_bytes());
            bytes.extend_from_slice(&0u32.to_le_bytes());
            for &v in &self.theta[g] {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            for &v in &self.theta[be] {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        };

        affine(&mut bytes, self.hidden, self.in_dim, lay.w1.clone(), lay.b1.clone());
        fnorm(&mut bytes, self.hidden, lay.g1.clone(), lay.be1.clone());
        affine(&mut bytes, self.hidden, self.hidden, lay.w2.clone(), lay.b2.clone());
        fnorm(&mut bytes, self.hidden, lay.g2.clone(), lay.be2.clone());
        affine(&mut bytes, self.in_dim, self.hidden, lay.w3.clone(), lay.b3.clone());

        let mut hasher = crc32fast::Hasher::new();
        hasher.update(&bytes);
        let crc = hasher.finalize();
        bytes.extend_from_slice(&crc.to_le_bytes());

        std::fs::write(path, bytes)?;
        Ok(())
    }

    /// Loads a parameter file and takes the θ₀ snapshot from it.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let mut r = ByteReader::new(&bytes);

        if r.take(4)? != MAGIC {
            return Err(Error::FormatError("bad magic; not a parameter file".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::FormatError(format!(
                "unsupported format version {version}"
            )));
        }
        let layer_count = r.u16()?;
        if layer_count != 5 {
            return Err(Error::FormatError(format!(
                "expected 5 layers, file declares {layer_count}"
            )));
        }

        struct RawLayer {
            kind: u8,
            d0: usize,
            d1: usize,
            payload: Vec<f64>,
        }
        let mut layers = Vec::with_capacity(5);
        for _ in 0..layer_count {
            let kind = r.u8()?;
            let d0 = r.u32()? as usize;
            let d1 = r.u32()? as usize;
            let count = match kind {
                KIND_AFFINE => d0 * d1 + d0,
                KIND_FEATURENORM => 2 * d0,
                other => {
                    return Err(Error::FormatError(format!("unknown layer kind {other}")));
                }
            };
            let mut payload = Vec::with_capacity(count);
            for _ in 0..count {
                payload.push(r.f64()?);
            }
            layers.push(RawLayer { kind, d0, d1, payload });
        }

        let stored_crc = r.u32()?;
        r.expect_end()?;
        let mut hasher = crc32fast::Hasher::new();
        hasher.update(&bytes[..bytes.len() - 4]);
        if hasher.finalize() != stored_crc {
            return Err(Error::FormatError("CRC mismatch; file corrupted".into()));
        }

        let kinds: Vec<u8> = layers.iter().map(|l| l.kind).collect();
        if kinds != [KIND_AFFINE, KIND_FEATURENORM, KIND_AFFINE, KIND_FEATURENORM, KIND_AFFINE] {
            return Err(Error::FormatError(format!(
                "unexpected layer sequence {kinds:?}"
            )));
        }
        let h = layers[0].d0;
        let f = layers[0].d1;
        let consistent = layers[1].d0 == h
            && layers[2].d0 == h
            && layers[2].d1 == h
            && layers[3].d0 == h
            && layers[4].d0 == f
            && layers[4].d1 == h;
        if !consistent || f == 0 || h < 2 {
            return Err(Error::ShapeMismatch {
                expected: format!("affine {h}x{f} / norm {h} / affine {h}x{h} / norm {h} / affine {f}x{h}"),
                got: layers
                    .iter()
                    .map(|l| format!("{}x{}", l.d0, l.d1))
                    .collect::<Vec<_>>()
                    .join(" / "),
            });
        }

        let lay = layout(f, h);
        let mut theta = vec![0.0; lay.len];
        let split_affine = |l: &RawLayer, w: Range<usize>, b: Range<usize>, theta: &mut [f64]| {
            theta[w].copy_from_slice(&l.payload[..l.d0 * l.d1]);
            theta[b].copy_from_slice(&l.payload[l.d0 * l.d1..]);
        };
        let split_fnorm = |l: &RawLayer, g: Range<usize>, be: Range<usize>, theta: &mut [f64]| {
            theta[g].copy_from_slice(&l.payload[..l.d0]);
            theta[be].copy_from_slice(&l.payload[l.d0..]);
        };
        split_affine(&layers[0], lay.w1.clone(), lay.b1.clone(), &mut theta);
        split_fnorm(&layers[1], lay.g1.clone(), lay.be1.clone(), &mut theta);
        split_affine(&layers[2], lay.w2.clone(), lay.b2.clone(), &mut theta);
        split_fnorm(&layers[3], lay.g2.clone(), lay.be2.clone(), &mut theta);
        split_affine(&layers[4], lay.w3.clone(), lay.b3.clone(), &mut theta);

        let adaptable: Vec<usize> = lay
            .g1
            .clone()
            .chain(lay.be1.clone())
            .chain(lay.g2.clone())
            .chain(lay.be2.clone())
            .chain(lay.w3.clone())
            .chain(lay.b3.clone())
            .collect();

        Ok(Self {
            in_dim: f,
            hidden: h,
            layout: lay,
            theta0: theta.clone(),
            theta,
            adaptable: adaptable.into(),
            version: 0,
        })
    }

    /// Flat positions of the output-affine weight block; test hook.
    pub fn output_weight_range(&self) -> Range<usize> {
        self.layout.w3.clone()
    }

    /// Flat positions of the output-affine bias block; test hook.
    pub fn output_bias_range(&self) -> Range<usize> {
        self.layout.b3.clone()
    }

    /// First position of the (frozen) input-affine weight block; test hook.
    pub fn frozen_probe_position(&self) -> usize {
        self.layout.w1.start
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalizes `a` to zero mean and unit population variance, writing into
/// `out`; returns 1/σ for the backward pass.
fn normalize(a: &[f64], out: &mut [f64]) -> f64 {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv_std = 1.0 / (var + FNORM_EPS).sqrt();
    for (o, &v) in out.iter_mut().zip(a) {
        *o = (v - mean) * inv_std;
    }
    inv_std
}

/// γ·n + β followed by ReLU.
fn relu_affine(n: &[f64], gamma: &[f64], beta: &[f64], out: &mut [f64]) {
    for i in 0..n.len() {
        out[i] = (gamma[i] * n[i] + beta[i]).max(0.0);
    }
}

/// Input gradient of featurenorm: da = (1/σ)(dn − mean(dn) − n·mean(dn∘n))
/// with dn = dz ⊙ γ.
fn norm_input_grad(dz: &[f64], n: &[f64], gamma: &[f64], inv_std: f64, da: &mut [f64]) {
    let h = dz.len();
    let mut sum_dn = 0.0;
    let mut sum_dn_n = 0.0;
    for i in 0..h {
        let dn = dz[i] * gamma[i];
        da[i] = dn;
        sum_dn += dn;
        sum_dn_n += dn * n[i];
    }
    let mean_dn = sum_dn / h as f64;
    let mean_dn_n = sum_dn_n / h as f64;
    for i in 0..h {
        da[i] = inv_std * (da[i] - mean_dn - n[i] * mean_dn_n);
    }
}

/// Little-endian cursor over the parameter-file bytes.
struct ByteReader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, at: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::FormatError(format!(
                "truncated file: wanted {n} bytes at offset {}, only {} remain",
                self.at,
                self.bytes.len() - self.at
            )));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn expect_end(&self) -> Result<()> {
        if self.at != self.bytes.len() {
            return Err(Error::FormatError(format!(
                "{} trailing bytes after CRC",
                self.bytes.len() - self.at
            )));
        }
        Ok(())
    }
}
