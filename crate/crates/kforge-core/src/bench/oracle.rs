//! Independent host-side reference implementations. These share no code with
//! the compiler or emulator path: plain Rust over slices, single precision,
//! mirroring each benchmark's documented formula.

pub fn vectoradd(a: &[f32], b: &[f32]) -> Vec<f32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn grayscale(pixels: &[i32]) -> Vec<i32> {
    pixels
        .iter()
        .map(|&p| {
            let r = (p / 65536) % 256;
            let g = (p / 256) % 256;
            let b = p % 256;
            let y = 0.299f32 * r as f32 + 0.587f32 * g as f32 + 0.114f32 * b as f32;
            (y + 0.5).floor() as i32
        })
        .collect()
}

/// Abramowitz-Stegun polynomial normal CDF, single precision.
fn cnd(x: f32) -> f32 {
    let k = 1.0f32 / (1.0f32 + 0.2316419f32 * x.abs());
    let poly = k * (0.31938154f32
        + k * (-0.35656378f32 + k * (1.7814779f32 + k * (-1.821256f32 + k * 1.3302744f32))));
    let w = 1.0f32 - 0.39894228f32 * (-0.5f32 * x * x).exp() * poly;
    if x < 0.0 {
        1.0f32 - w
    } else {
        w
    }
}

pub fn blackscholes(rand: &[f32]) -> (Vec<f32>, Vec<f32>) {
    let strike = 50.0f32;
    let rate = 0.05f32;
    let vol = 0.3f32;
    let years = 1.0f32;
    let mut call = Vec::with_capacity(rand.len());
    let mut put = Vec::with_capacity(rand.len());
    for &s in rand {
        let sqrtt = years.sqrt();
        let d1 = ((s / strike).ln() + (rate + vol * vol / 2.0) * years) / (vol * sqrtt);
        let d2 = d1 - vol * sqrtt;
        let w1 = cnd(d1);
        let w2 = cnd(d2);
        let disc = (-rate * years).exp();
        call.push(s * w1 - strike * disc * w2);
        put.push(strike * disc * (1.0 - w2) - s * (1.0 - w1));
    }
    (call, put)
}

pub fn rendertrack(status: &[i32]) -> Vec<i32> {
    status
        .iter()
        .map(|&s| {
            let (r, g, b) = match s {
                1 => (128, 128, 128),
                -1 => (0, 0, 0),
                -2 => (255, 0, 0),
                -3 => (0, 255, 0),
                -4 => (0, 0, 255),
                -5 => (255, 255, 0),
                _ => (255, 128, 0),
            };
            r * 65536 + g * 256 + b
        })
        .collect()
}

pub fn nbody(
    posx: &[f32],
    posy: &[f32],
    posz: &[f32],
    eps: f32,
) -> (Vec<f32>, Vec<f32>, Vec<f32>) {
    let n = posx.len();
    let mut accx = vec![0.0f32; n];
    let mut accy = vec![0.0f32; n];
    let mut accz = vec![0.0f32; n];
    for i in 0..n {
        let mut ax = 0.0f32;
        let mut ay = 0.0f32;
        let mut az = 0.0f32;
        for j in 0..n {
            let dx = posx[j] - posx[i];
            let dy = posy[j] - posy[i];
            let dz = posz[j] - posz[i];
            let dist2 = dx * dx + dy * dy + dz * dz + eps;
            let invr = 1.0f32 / dist2.sqrt();
            let invr3 = invr * invr * invr;
            ax += dx * invr3;
            ay += dy * invr3;
            az += dz * invr3;
        }
        accx[i] = ax;
        accy[i] = ay;
        accz[i] = az;
    }
    (accx, accy, accz)
}

/// Direct O(n^2) DFT, single precision throughout.
pub fn dft(inreal: &[f32], inimag: &[f32]) -> (Vec<f32>, Vec<f32>) {
    let n = inreal.len();
    let mut outreal = vec![0.0f32; n];
    let mut outimag = vec![0.0f32; n];
    for k in 0..n {
        let mut sumreal = 0.0f32;
        let mut sumimag = 0.0f32;
        for t in 0..n {
            let angle = (2.0f32 * crate::lang::PI_F32 * t as f32 * k as f32) / n as f32;
            sumreal += inreal[t] * angle.cos() + inimag[t] * angle.sin();
            sumimag -= inreal[t] * angle.sin() + inimag[t] * angle.cos();
        }
        outreal[k] = sumreal;
        outimag[k] = sumimag;
    }
    (outreal, outimag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_of_unit_impulse_is_flat() {
        let inreal = vec![1.0, 0.0, 0.0, 0.0];
        let inimag = vec![0.0; 4];
        let (re, im) = dft(&inreal, &inimag);
        for k in 0..4 {
            assert!((re[k] - 1.0).abs() < 1e-6);
            assert!(im[k].abs() < 1e-6);
        }
    }

    #[test]
    fn grayscale_white_is_255() {
        assert_eq!(grayscale(&[0xFFFFFF])[0], 255);
    }

    #[test]
    fn blackscholes_put_call_parity_holds_loosely() {
        // c - p = S - K e^{-rT}, within single-precision slack.
        let (call, put) = blackscholes(&[60.0]);
        let s = 60.0f32;
        let k = 50.0f32;
        let disc = (-0.05f32).exp();
        let parity = s - k * disc;
        assert!((call[0] - put[0] - parity).abs() < 1e-3);
    }
}
