//! Normal and Student-t distribution functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal distribution function.
///
/// Uses the complementary error function on both sides so that tail
/// probabilities keep full relative accuracy.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Lower-tail quantile for `p <= 0.5` (Wichura's AS 241 rational approximation).
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_4)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((r * 5226.495_278_852_545 + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Standard normal quantile, refined by one Newton step on the lower tail.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain { what: "probability", value: p });
    }
    Ok(std_normal_quantile_unchecked(p))
}

/// [`std_normal_quantile`] without the domain check; `p` must lie in (0, 1).
#[inline]
pub fn std_normal_quantile_unchecked(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let lower = p.min(1.0 - p);
    let mut x = ppnd16(lower);
    let dens = std_normal_pdf(x);
    if dens > 0.0 {
        x -= (std_normal_cdf(x) - lower) / dens;
    }
    if p > 0.5 {
        -x
    } else {
        x
    }
}

/// Natural log of the gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Natural log of the beta function.
#[inline]
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` given `x` and `y = 1 - x`
/// separately (so callers can pass an exact complement) and `ln B(a, b)`.
fn beta_reg_parts(a: f64, b: f64, x: f64, y: f64, ln_b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * y.ln() - ln_b).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, y) / b
    }
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_parts(a, b, x, 1.0 - x, ln_beta(a, b))
}

/// Student-t distribution with `nu` degrees of freedom (location 0, scale 1).
///
/// Normalizing constants are cached so repeated evaluations at a fixed `nu`
/// only pay for the incomplete beta continued fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    nu: f64,
    /// `ln B(nu/2, 1/2)`
    ln_beta: f64,
    /// log of the density normalizing constant.
    ln_norm: f64,
}

impl StudentT {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain { what: "degrees of freedom", value: nu });
        }
        let ln_beta = ln_beta(0.5 * nu, 0.5);
        Ok(StudentT { nu, ln_beta, ln_norm: -ln_beta - 0.5 * nu.ln() })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    #[inline]
    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.ln_norm - 0.5 * (self.nu + 1.0) * (x * x / self.nu).ln_1p()
    }

    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `P(T <= x)` for `x <= 0`, computed without cancellation.
    #[inline]
    fn lower_tail(&self, x: f64) -> f64 {
        let x2 = x * x;
        let denom = self.nu + x2;
        0.5 * beta_reg_parts(0.5 * self.nu, 0.5, self.nu / denom, x2 / denom, self.ln_beta)
    }

    #[inline]
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        if x <= 0.0 {
            self.lower_tail(x)
        } else {
            1.0 - self.lower_tail(-x)
        }
    }

    /// Quantile function; `p` must lie in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain { what: "probability", value: p });
        }
        Ok(self.quantile_unchecked(p))
    }

    /// [`StudentT::quantile`] without the domain check.
    pub fn quantile_unchecked(&self, p: f64) -> f64 {
        if p == 0.5 {
            return 0.0;
        }
        let q = p.min(1.0 - p);
        let x = self.lower_quantile(q);
        if p > 0.5 {
            -x
        } else {
            x
        }
    }

    /// Solves `F(x) = q` for `q < 0.5`, returning `x < 0`.
    fn lower_quantile(&self, q: f64) -> f64 {
        let nu = self.nu;
        if nu == 1.0 {
            return -1.0 / (PI * q).tan();
        }
        if nu == 2.0 {
            let a = 4.0 * q * (1.0 - q);
            return -(2.0 * (1.0 - 2.0 * q) * (1.0 - 2.0 * q) / a).sqrt();
        }
        let mut x = -hill_quantile(2.0 * q, nu);
        if !x.is_finite() || x >= 0.0 {
            x = std_normal_quantile_unchecked(q);
        }
        // Safeguarded Newton iteration on ln F, which is close to linear in
        // ln|x| in the tails.
        let ln_q = q.ln();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = 0.0;
        for _ in 0..100 {
            let f = self.lower_tail(x);
            if f == q {
                return x;
            }
            if f < q {
                lo = x;
            } else {
                hi = x;
            }
            let dens = self.pdf(x);
            let step = if f > 0.0 && dens > 0.0 { (f.ln() - ln_q) * f / dens } else { f64::NAN };
            let mut next = x - step;
            if !next.is_finite() || next <= lo || next >= hi {
                next = if lo.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.min(-1.0) };
            }
            if (next - x).abs() <= 1e-15 * x.abs() {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Hill's (1970) approximation to the upper Student-t quantile for a
/// two-sided tail probability `p2`. Used only as a starting point.
fn hill_quantile(p2: f64, n: f64) -> f64 {
    let a = 1.0 / (n - 0.5);
    let b = 48.0 / (a * a);
    let mut c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
    let d = ((94.5 / (b + c) - 3.0) / b + 1.0) * (a * PI / 2.0).sqrt() * n;
    let x = d * p2;
    let mut y = x.powf(2.0 / n);
    if y > 0.05 + a {
        let x = std_normal_quantile_unchecked(0.5 * p2);
        y = x * x;
        if n < 5.0 {
            c += 0.3 * (n - 4.5) * (x + 0.6);
        }
        c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
        y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
        y = a * y * y;
        y = if y > 0.002 { y.exp() - 1.0 } else { 0.5 * y * y + y };
    } else {
        y = ((1.0 / (((n + 6.0) / (n * y) - 0.089 * d - 0.822) * (n + 2.0) * 3.0) + 0.5 / (n + 4.0))
            * y
            - 1.0)
            * (n + 1.0)
            / (n + 2.0)
            + 1.0 / y;
    }
    (n * y).sqrt()
}

/// Student-t distribution function.
pub fn student_t_cdf(x: f64, nu: f64) -> Result<f64> {
    Ok(StudentT::new(nu)?.cdf(x))
}

/// Student-t quantile function.
pub fn student_t_quantile(p: f64, nu: f64) -> Result<f64> {
    StudentT::new(nu)?.quantile(p)
}

// Gauss–Legendre half-rules (nodes on (0,1) of the symmetric rule) used by
// the bivariate normal integration below.
const GL6_W: [f64; 3] = [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4];
const GL6_X: [f64; 3] = [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197];
const GL12_W: [f64; 6] = [
    0.047_175_336_386_511_77,
    0.106_939_325_995_318_3,
    0.160_078_328_543_346_4,
    0.203_167_426_723_065_9,
    0.233_492_536_538_354_7,
    0.249_147_045_813_402_9,
];
const GL12_X: [f64; 6] = [
    0.981_560_634_246_719_1,
    0.904_117_256_370_475,
    0.769_902_674_194_305,
    0.587_317_954_286_617_1,
    0.367_831_498_998_180_2,
    0.125_233_408_511_469_2,
];
const GL20_W: [f64; 10] = [
    0.017_614_007_139_152_12,
    0.040_601_429_800_386_94,
    0.062_672_048_334_109_06,
    0.083_276_741_576_704_75,
    0.101_930_119_817_240_4,
    0.118_194_531_961_518_4,
    0.131_688_638_449_176_6,
    0.142_096_109_318_382_1,
    0.149_172_986_472_603_7,
    0.152_753_387_130_725_9,
];
const GL20_X: [f64; 10] = [
    0.993_128_599_185_094_9,
    0.963_971_927_277_913_8,
    0.912_234_428_251_325_9,
    0.839_116_971_822_218_8,
    0.746_331_906_460_150_8,
    0.636_053_680_726_515,
    0.510_867_001_950_827_1,
    0.373_706_088_715_419_6,
    0.227_785_851_141_645_1,
    0.076_526_521_133_497_33,
];

/// `P(X < h, Y < k)` for a standard bivariate normal with correlation `r`
/// (Drezner–Wesolowsky integration as refined by Genz).
pub fn bivariate_normal_cdf(h: f64, k: f64, r: f64) -> f64 {
    upper_bvn(-h, -k, r)
}

/// `P(X > dh, Y > dk)`.
fn upper_bvn(dh: f64, dk: f64, r: f64) -> f64 {
    if dh == f64::INFINITY || dk == f64::INFINITY {
        return 0.0;
    }
    if dh == f64::NEG_INFINITY {
        return if dk == f64::NEG_INFINITY { 1.0 } else { std_normal_cdf(-dk) };
    }
    if dk == f64::NEG_INFINITY {
        return std_normal_cdf(-dh);
    }
    if r == 0.0 {
        return std_normal_cdf(-dh) * std_normal_cdf(-dk);
    }
    let (w, x): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6_W, &GL6_X)
    } else if r.abs() < 0.75 {
        (&GL12_W, &GL12_X)
    } else {
        (&GL20_W, &GL20_X)
    };
    let tp = 2.0 * PI;
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for (wi, xi) in w.iter().zip(x) {
            for node in [1.0 - xi, 1.0 + xi] {
                let sn = (asr * node).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / tp + std_normal_cdf(-h) * std_normal_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * std_normal_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            let mut sum = 0.0;
            for (wi, xi) in w.iter().zip(x) {
                for node in [1.0 - xi, 1.0 + xi] {
                    let xs = (a * node) * (a * node);
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                        sum += wi * asr.exp() * (sp - ep);
                    }
                }
            }
            bvn = (a * sum - bvn) / tp;
        }
        if r > 0.0 {
            bvn += std_normal_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                std_normal_cdf(k) - std_normal_cdf(h)
            } else {
                std_normal_cdf(-h) - std_normal_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}
