//! Multivariate-quadratic signatures with an unbalanced oil-and-vinegar trapdoor.
//!
//! The public key is a system of `o` quadratic polynomials in `n = o + v`
//! variables over GF(q):
//!
//! ```text
//! P_i(x) = sum_{j<=k} a[i][j][k]·x_j·x_k + sum_j b[i][j]·x_j + c[i]
//! ```
//!
//! obtained by composing a central map `F` (no oil×oil products) with a
//! secret invertible affine map `T`. Fixing the vinegar variables makes `F`
//! linear in the oil variables, which is how the signer finds preimages.
//! Variables `0..v` of the central map are vinegar, `v..n` are oil.

use thiserror::Error;

use crate::codec::{DecodeError, Reader};
use crate::primitives::{hash_parts, RandomSeed, SeededRng};

pub const SALT_LEN: usize = 16;
const VINEGAR_ATTEMPTS: usize = 64;
const SALT_ATTEMPTS: usize = 64;
const KEYGEN_CHECK_POINTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MqError {
    #[error("invalid MQ parameters: {0}")]
    InvalidParams(&'static str),
    #[error("no solvable linear system after {0} attempts")]
    SigningFailure(usize),
    #[error("malformed signature")]
    MalformedSignature,
    #[error("malformed encoding: {0}")]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MqParams {
    /// Oil variables, equal to the number of equations.
    pub o: usize,
    /// Vinegar variables.
    pub v: usize,
    /// Prime field size.
    pub q: u32,
}

impl MqParams {
    /// "desk-uov".
    pub const DESK: MqParams = MqParams { o: 16, v: 32, q: 31 };
    pub const TINY: MqParams = MqParams { o: 2, v: 2, q: 7 };

    pub fn n_vars(&self) -> usize {
        self.o + self.v
    }

    pub fn quad_terms(&self) -> usize {
        let n = self.n_vars();
        n * (n + 1) / 2
    }

    pub fn validate(&self) -> Result<(), MqError> {
        if !(2..=1 << 16).contains(&self.q) || !is_prime(self.q) {
            return Err(MqError::InvalidParams("q must be a prime at most 2^16"));
        }
        if self.o == 0 {
            return Err(MqError::InvalidParams("need at least one oil variable"));
        }
        if self.v < self.o {
            return Err(MqError::InvalidParams("need v >= o"));
        }
        if self.n_vars() > 255 {
            return Err(MqError::InvalidParams("too many variables"));
        }
        Ok(())
    }

    pub fn public_key_bytes(&self) -> usize {
        2 * self.o * (self.quad_terms() + self.n_vars() + 1)
    }

    pub fn secret_key_bytes(&self) -> usize {
        let n = self.n_vars();
        self.public_key_bytes() + 2 * (n * n + n)
    }

    pub fn signature_bytes(&self) -> usize {
        SALT_LEN + 2 * self.n_vars()
    }
}

fn is_prime(q: u32) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

/// Arithmetic in GF(q) for prime q < 2^17.
#[derive(Debug, Clone, Copy)]
struct Field(u32);

impl Field {
    fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.0
    }

    fn sub(self, a: u32, b: u32) -> u32 {
        (a + self.0 - b) % self.0
    }

    fn mul(self, a: u32, b: u32) -> u32 {
        ((u64::from(a) * u64::from(b)) % u64::from(self.0)) as u32
    }

    fn inv(self, a: u32) -> u32 {
        debug_assert!(a != 0);
        let mut result = 1u32;
        let mut base = a;
        let mut exp = self.0 - 2;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        result
    }
}

/// One quadratic polynomial in `n` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quadratic {
    /// `a[j][k]` for `j <= k`, lexicographic.
    pub quad: Vec<u32>,
    pub linear: Vec<u32>,
    pub constant: u32,
}

/// Position of `(j, k)`, `j <= k`, in the lexicographic upper-triangular order.
pub fn quad_index(n: usize, j: usize, k: usize) -> usize {
    debug_assert!(j <= k && k < n);
    j * n - j * j.saturating_sub(1) / 2 + (k - j)
}

impl Quadratic {
    fn zero(n: usize) -> Self {
        Self {
            quad: vec![0; n * (n + 1) / 2],
            linear: vec![0; n],
            constant: 0,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    /// Direct evaluation of the sum of all terms at `x`.
    pub fn eval(&self, q: u32, x: &[u32]) -> u32 {
        let n = self.n_vars();
        let q64 = u64::from(q);
        let mut acc = u64::from(self.constant);
        let mut idx = 0;
        for j in 0..n {
            let mut row = 0u64;
            for k in j..n {
                row += u64::from(self.quad[idx]) * u64::from(x[k]);
                idx += 1;
            }
            acc = (acc + (row % q64) * u64::from(x[j]) + u64::from(self.linear[j]) * u64::from(x[j])) % q64;
        }
        acc as u32
    }

    fn write(&self, out: &mut Vec<u8>) {
        for &c in self.quad.iter().chain(&self.linear).chain([&self.constant]) {
            out.extend_from_slice(&(c as u16).to_le_bytes());
        }
    }

    fn read(r: &mut Reader<'_>, n: usize, q: u32) -> Result<Self, DecodeError> {
        let mut read_elem = || -> Result<u32, DecodeError> {
            let v = u32::from(r.u16()?);
            if v >= q {
                return Err(DecodeError::Invalid("field element out of range"));
            }
            Ok(v)
        };
        let quad = (0..n * (n + 1) / 2).map(|_| read_elem()).collect::<Result<_, _>>()?;
        let linear = (0..n).map(|_| read_elem()).collect::<Result<_, _>>()?;
        let constant = read_elem()?;
        Ok(Self {
            quad,
            linear,
            constant,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MqPublicKey {
    pub params: MqParams,
    pub polys: Vec<Quadratic>,
}

/// Invertible affine map `x -> M·x + c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<u32>>,
    pub offset: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MqSecretKey {
    pub params: MqParams,
    pub central: Vec<Quadratic>,
    pub affine: AffineMap,
    inverse: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MqSignature {
    pub x: Vec<u32>,
    pub salt: [u8; SALT_LEN],
}

impl AffineMap {
    pub fn apply(&self, q: u32, x: &[u32]) -> Vec<u32> {
        let f = Field(q);
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, &c)| row.iter().zip(x).fold(c, |acc, (&m, &xi)| f.add(acc, f.mul(m, xi))))
            .collect()
    }
}

/// Gauss-Jordan inverse over GF(q), or `None` if singular.
fn invert_matrix(f: Field, m: &[Vec<u32>]) -> Option<Vec<Vec<u32>>> {
    let n = m.len();
    let mut a: Vec<Vec<u32>> = m.to_vec();
    let mut inv: Vec<Vec<u32>> = (0..n).map(|i| (0..n).map(|j| u32::from(i == j)).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != 0)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = f.inv(a[col][col]);
        for j in 0..n {
            a[col][j] = f.mul(a[col][j], scale);
            inv[col][j] = f.mul(inv[col][j], scale);
        }
        for r in 0..n {
            let factor = a[r][col];
            if r != col && factor != 0 {
                for j in 0..n {
                    a[r][j] = f.sub(a[r][j], f.mul(factor, a[col][j]));
                    inv[r][j] = f.sub(inv[r][j], f.mul(factor, inv[col][j]));
                }
            }
        }
    }
    Some(inv)
}

/// Solves `A·z = rhs` for square `A`, or `None` if singular.
fn solve(f: Field, a: &[Vec<u32>], rhs: &[u32]) -> Option<Vec<u32>> {
    let n = a.len();
    let mut aug: Vec<Vec<u32>> = a
        .iter()
        .zip(rhs)
        .map(|(row, &r)| row.iter().copied().chain([r]).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| aug[r][col] != 0)?;
        aug.swap(col, pivot);
        let scale = f.inv(aug[col][col]);
        for x in aug[col].iter_mut() {
            *x = f.mul(*x, scale);
        }
        for r in 0..n {
            let factor = aug[r][col];
            if r != col && factor != 0 {
                for j in col..=n {
                    aug[r][j] = f.sub(aug[r][j], f.mul(factor, aug[col][j]));
                }
            }
        }
    }
    Some(aug.iter().map(|row| row[n]).collect())
}

/// Symbolic expansion of `F ∘ T` for one polynomial.
fn compose(q: u32, central: &Quadratic, t: &AffineMap) -> Quadratic {
    let f = Field(q);
    let n = central.n_vars();
    let q64 = u64::from(q);
    // Dense upper-triangular form of the central quadratic part.
    let mut upper = vec![vec![0u32; n]; n];
    let mut idx = 0;
    for (j, row) in upper.iter_mut().enumerate() {
        for cell in row.iter_mut().skip(j) {
            *cell = central.quad[idx];
            idx += 1;
        }
    }
    let m = &t.matrix;
    // R = M^T · Q · M
    let qm: Vec<Vec<u32>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|b| {
                    let s: u64 = (j..n).map(|k| u64::from(upper[j][k]) * u64::from(m[k][b])).sum();
                    (s % q64) as u32
                })
                .collect()
        })
        .collect();
    let r: Vec<Vec<u32>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let s: u64 = (0..n).map(|j| u64::from(m[j][a]) * u64::from(qm[j][b])).sum();
                    (s % q64) as u32
                })
                .collect()
        })
        .collect();
    let mut out = Quadratic::zero(n);
    let mut idx = 0;
    for a in 0..n {
        for b in a..n {
            out.quad[idx] = if a == b { r[a][a] } else { f.add(r[a][b], r[b][a]) };
            idx += 1;
        }
    }
    // Linear part: M^T · ((Q + Q^T)·c + beta).
    let c = &t.offset;
    let inner: Vec<u32> = (0..n)
        .map(|j| {
            let s: u64 = (0..n)
                .map(|k| u64::from(f.add(upper[j][k], upper[k][j])) * u64::from(c[k]))
                .sum();
            f.add((s % q64) as u32, central.linear[j])
        })
        .collect();
    for (a, lin) in out.linear.iter_mut().enumerate() {
        let s: u64 = (0..n).map(|j| u64::from(m[j][a]) * u64::from(inner[j])).sum();
        *lin = (s % q64) as u32;
    }
    // Constant: c^T·Q·c + beta·c + gamma.
    let mut constant = central.constant;
    for j in 0..n {
        for k in j..n {
            constant = f.add(constant, f.mul(upper[j][k], f.mul(c[j], c[k])));
        }
        constant = f.add(constant, f.mul(central.linear[j], c[j]));
    }
    out.constant = constant;
    out
}

fn random_vec(rng: &mut SeededRng, len: usize, q: u32) -> Vec<u32> {
    (0..len).map(|_| rng.below(q)).collect()
}

fn random_central(rng: &mut SeededRng, params: &MqParams) -> Quadratic {
    let n = params.n_vars();
    let mut poly = Quadratic::zero(n);
    for j in 0..params.v {
        for k in j..n {
            poly.quad[quad_index(n, j, k)] = rng.below(params.q);
        }
    }
    poly.linear = random_vec(rng, n, params.q);
    poly.constant = rng.below(params.q);
    poly
}

pub fn mq_keygen(params: MqParams, seed: &RandomSeed) -> Result<(MqPublicKey, MqSecretKey), MqError> {
    params.validate()?;
    let f = Field(params.q);
    let n = params.n_vars();
    let mut rng = seed.rng();
    let central: Vec<Quadratic> = (0..params.o).map(|_| random_central(&mut rng, &params)).collect();
    let (matrix, inverse) = loop {
        let m: Vec<Vec<u32>> = (0..n).map(|_| random_vec(&mut rng, n, params.q)).collect();
        if let Some(inv) = invert_matrix(f, &m) {
            break (m, inv);
        }
    };
    let affine = AffineMap {
        matrix,
        offset: random_vec(&mut rng, n, params.q),
    };
    let polys: Vec<Quadratic> = central.iter().map(|c| compose(params.q, c, &affine)).collect();
    let pk = MqPublicKey { params, polys };
    let sk = MqSecretKey {
        params,
        central,
        affine,
        inverse,
    };
    for _ in 0..KEYGEN_CHECK_POINTS {
        let x = random_vec(&mut rng, n, params.q);
        assert_eq!(pk.evaluate(&x), sk.evaluate_composed(&x), "public key expansion mismatch");
    }
    Ok((pk, sk))
}

/// Maps `msg || salt` to `count` uniform elements of GF(q).
///
/// Blocks are `hash(msg || salt || u32-LE counter)`; bytes (or 2-byte LE
/// words when q > 256) at or above the largest multiple of q are rejected.
pub fn hash_to_field(msg: &[u8], salt: &[u8], count: usize, q: u32) -> Vec<u32> {
    let (width, space) = if q <= 256 { (1, 256u32) } else { (2, 65536u32) };
    let limit = q * (space / q);
    let mut out = Vec::with_capacity(count);
    let mut counter = 0u32;
    while out.len() < count {
        let block = hash_parts(&[msg, salt, &counter.to_le_bytes()]);
        for chunk in block.0.chunks_exact(width) {
            let value = chunk.iter().rev().fold(0u32, |acc, &b| acc << 8 | u32::from(b));
            if value < limit && out.len() < count {
                out.push(value % q);
            }
        }
        counter += 1;
    }
    out
}

impl MqPublicKey {
    pub fn evaluate(&self, x: &[u32]) -> Vec<u32> {
        self.polys.iter().map(|p| p.eval(self.params.q, x)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.params.public_key_bytes());
        for p in &self.polys {
            p.write(&mut out);
        }
        out
    }

    pub fn from_bytes(params: MqParams, bytes: &[u8]) -> Result<Self, MqError> {
        params.validate()?;
        let mut r = Reader::new(bytes);
        let polys = (0..params.o)
            .map(|_| Quadratic::read(&mut r, params.n_vars(), params.q))
            .collect::<Result<_, _>>()?;
        r.finish()?;
        Ok(Self { params, polys })
    }
}

impl MqSecretKey {
    /// `F(T(x))`, evaluated without the symbolic expansion.
    pub fn evaluate_composed(&self, x: &[u32]) -> Vec<u32> {
        let y = self.affine.apply(self.params.q, x);
        self.central.iter().map(|p| p.eval(self.params.q, &y)).collect()
    }

    pub fn public_key(&self) -> MqPublicKey {
        MqPublicKey {
            params: self.params,
            polys: self.central.iter().map(|c| compose(self.params.q, c, &self.affine)).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.params.secret_key_bytes());
        for p in &self.central {
            p.write(&mut out);
        }
        for &e in self.affine.matrix.iter().flatten().chain(&self.affine.offset) {
            out.extend_from_slice(&(e as u16).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(params: MqParams, bytes: &[u8]) -> Result<Self, MqError> {
        params.validate()?;
        let n = params.n_vars();
        let mut r = Reader::new(bytes);
        let central: Vec<Quadratic> = (0..params.o)
            .map(|_| Quadratic::read(&mut r, n, params.q))
            .collect::<Result<_, _>>()?;
        let mut elems = (0..n * n + n)
            .map(|_| {
                let v = u32::from(r.u16()?);
                if v >= params.q {
                    return Err(DecodeError::Invalid("field element out of range"));
                }
                Ok(v)
            })
            .collect::<Result<Vec<u32>, _>>()?;
        r.finish()?;
        let offset = elems.split_off(n * n);
        let matrix: Vec<Vec<u32>> = elems.chunks(n).map(<[u32]>::to_vec).collect();
        let inverse =
            invert_matrix(Field(params.q), &matrix).ok_or(DecodeError::Invalid("singular affine map"))?;
        for poly in &central {
            let oil_products = (params.v..n).flat_map(|j| (j..n).map(move |k| (j, k)));
            if oil_products.into_iter().any(|(j, k)| poly.quad[quad_index(n, j, k)] != 0) {
                return Err(DecodeError::Invalid("oil-by-oil term in central map").into());
            }
        }
        Ok(Self {
            params,
            central,
            affine: AffineMap { matrix, offset },
            inverse,
        })
    }

    /// Substitutes vinegar values into the central map, returning the
    /// `o × o` oil coefficient matrix and the constant of each equation.
    fn linearize(&self, vinegar: &[u32]) -> (Vec<Vec<u32>>, Vec<u32>) {
        let p = &self.params;
        let f = Field(p.q);
        let n = p.n_vars();
        let mut matrix = Vec::with_capacity(p.o);
        let mut constants = Vec::with_capacity(p.o);
        for poly in &self.central {
            let mut oil: Vec<u32> = poly.linear[p.v..].to_vec();
            let mut constant = poly.constant;
            let mut idx = 0;
            for j in 0..n {
                for k in j..n {
                    let a = poly.quad[idx];
                    idx += 1;
                    if a == 0 || j >= p.v {
                        continue;
                    }
                    if k < p.v {
                        constant = f.add(constant, f.mul(a, f.mul(vinegar[j], vinegar[k])));
                    } else {
                        oil[k - p.v] = f.add(oil[k - p.v], f.mul(a, vinegar[j]));
                    }
                }
                if j < p.v {
                    constant = f.add(constant, f.mul(poly.linear[j], vinegar[j]));
                }
            }
            matrix.push(oil);
            constants.push(constant);
        }
        (matrix, constants)
    }
}

pub fn mq_sign(sk: &MqSecretKey, msg: &[u8], seed: &RandomSeed) -> Result<MqSignature, MqError> {
    let p = &sk.params;
    let f = Field(p.q);
    let mut rng = seed.rng();
    for _ in 0..SALT_ATTEMPTS {
        let salt: [u8; SALT_LEN] = rng.bytes();
        let target = hash_to_field(msg, &salt, p.o, p.q);
        for _ in 0..VINEGAR_ATTEMPTS {
            let vinegar = random_vec(&mut rng, p.v, p.q);
            let (matrix, constants) = sk.linearize(&vinegar);
            let rhs: Vec<u32> = target.iter().zip(&constants).map(|(&y, &c)| f.sub(y, c)).collect();
            let Some(oil) = solve(f, &matrix, &rhs) else {
                continue;
            };
            let w: Vec<u32> = vinegar.into_iter().chain(oil).collect();
            let shifted: Vec<u32> = w.iter().zip(&sk.affine.offset).map(|(&wi, &c)| f.sub(wi, c)).collect();
            let x = AffineMap {
                matrix: sk.inverse.clone(),
                offset: vec![0; p.n_vars()],
            }
            .apply(p.q, &shifted);
            return Ok(MqSignature { x, salt });
        }
    }
    Err(MqError::SigningFailure(SALT_ATTEMPTS * VINEGAR_ATTEMPTS))
}

pub fn mq_verify(pk: &MqPublicKey, msg: &[u8], sig: &MqSignature) -> Result<bool, MqError> {
    let p = &pk.params;
    if sig.x.len() != p.n_vars() || sig.x.iter().any(|&e| e >= p.q) {
        return Err(MqError::MalformedSignature);
    }
    let target = hash_to_field(msg, &sig.salt, p.o, p.q);
    Ok(pk.evaluate(&sig.x) == target)
}

impl MqSignature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.salt.to_vec();
        for &e in &self.x {
            out.extend_from_slice(&(e as u16).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(params: &MqParams, bytes: &[u8]) -> Result<Self, MqError> {
        if bytes.len() != params.signature_bytes() {
            return Err(MqError::MalformedSignature);
        }
        let mut r = Reader::new(bytes);
        let salt = r.array()?;
        let x = (0..params.n_vars())
            .map(|_| r.u16().map(u32::from))
            .collect::<Result<Vec<_>, _>>()?;
        if x.iter().any(|&e| e >= params.q) {
            return Err(MqError::MalformedSignature);
        }
        Ok(Self { x, salt })
    }
}
