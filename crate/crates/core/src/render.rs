//! Per-pixel classification of orbits into Fatou components and escape
//! behaviour, and PPM/PNG output with a fixed palette.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::{project, EscapeGuards, FamilyParams, Termination};
use crate::error::{Error, Result};
use crate::pressure::trapping_radius;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViewMode {
    Plane,
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSpec {
    pub mode: ViewMode,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub width: usize,
    pub height: usize,
    pub max_iter: usize,
    pub guards: EscapeGuards,
}

impl ViewSpec {
    pub fn new(mode: ViewMode, x_range: (f64, f64), y_range: (f64, f64), width: usize, height: usize, max_iter: usize) -> Result<Self> {
        let spec = ViewSpec {
            mode,
            x_range,
            y_range,
            width,
            height,
            max_iter,
            guards: EscapeGuards::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok_range = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 < r.1;
        if self.width == 0 || self.height == 0 || !ok_range(self.x_range) || !ok_range(self.y_range) {
            return Err(Error::InvalidParams(format!("bad view {self:?}")));
        }
        if self.mode == ViewMode::Cylinder && (self.y_range.0 < 0.0 || self.y_range.1 > TAU) {
            return Err(Error::InvalidParams(format!(
                "cylinder view needs y-range inside [0, 2pi), got {:?}",
                self.y_range
            )));
        }
        Ok(())
    }

    /// Centre of pixel (px, py); row 0 is the top (largest Im).
    pub fn pixel_center(&self, px: usize, py: usize) -> Complex64 {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        Complex64::new(
            x0 + (px as f64 + 0.5) * (x1 - x0) / self.width as f64,
            y1 - (py as f64 + 0.5) * (y1 - y0) / self.height as f64,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Baker,
    AttractingBasin,
    Wandering(i64),
    EscapingJulia,
    Undecided,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Baker => f.write_str("Baker"),
            Label::AttractingBasin => f.write_str("AttractingBasin"),
            Label::Wandering(k) => write!(f, "Wandering({k})"),
            Label::EscapingJulia => f.write_str("EscapingJulia"),
            Label::Undecided => f.write_str("Undecided"),
        }
    }
}

/// Forward-invariant left region on which orbits tend to −∞ in real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeftTrap {
    /// {Re z < x}: Re λ + (ℓ−1)x + eˣ < 0 makes every step keep Re below x
    /// (and, for ℓ = 1, lower it by at least −Re λ − eˣ).
    HalfPlane(f64),
    /// λ = 0, ℓ = 1 (f(z) = z − e^z): {Re e^{−z} > r}. With w = e^{−z} the
    /// map is w ↦ w·e^{1/w} = w + 1 + ρ, |ρ| ≤ 0.65/|w|, so for r ≥ 4 each step
    /// raises Re w by at least 0.83 and Re z tends to −∞. One component per
    /// horizontal strip of height 2π.
    ExpHalfPlane(f64),
}

impl LeftTrap {
    pub fn for_params(p: &FamilyParams) -> Option<Self> {
        let ell = p.ell_f64();
        let lam = p.lambda();
        if p.ell() >= 2 {
            let x = -2.0 * ell;
            return (lam.re + (ell - 1.0) * x + x.exp() < 0.0).then_some(LeftTrap::HalfPlane(x));
        }
        if lam.re < 0.0 {
            return Some(LeftTrap::HalfPlane((-lam.re / 2.0).ln().min(-1.0)));
        }
        if lam == Complex64::new(0.0, 0.0) {
            return Some(LeftTrap::ExpHalfPlane(4.0));
        }
        None
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            LeftTrap::HalfPlane(x) => z.re < x,
            LeftTrap::ExpHalfPlane(r) => (-z).exp().re > r,
        }
    }
}

/// Quantities shared by all pixels of one family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classifier {
    pub p: FamilyParams,
    pub trap: Option<LeftTrap>,
    /// Disc about Log c (in the quotient) mapped into itself.
    pub capture: Option<f64>,
}

impl Classifier {
    pub fn new(p: &FamilyParams) -> Self {
        Classifier {
            p: *p,
            trap: LeftTrap::for_params(p),
            capture: trapping_radius(p),
        }
    }

    /// Label and the step at which it was decided.
    ///
    /// The orbit is followed as a cylinder point q plus an integer lift
    /// index m (z = q + 2πim). Since f(q + 2πim) = f(q) + 2πiℓm the index
    /// evolves exactly as m ↦ ℓm + jump, so wandering orbits keep full
    /// precision however far their imaginary part drifts.
    ///
    /// Rules, checked before every step: left trap or left guard → Baker;
    /// right guard → EscapingJulia; inside the capture disc about Log c (or
    /// within the fixed-point tolerance) in the quotient → AttractingBasin
    /// if the lift is the disc at Log c itself, otherwise Wandering(k) for
    /// the translate Log c + 2πik; no decision within `max_iter` →
    /// Undecided. In cylinder mode all translates are one disc, so capture
    /// always means AttractingBasin.
    pub fn classify(&self, z: Complex64, mode: ViewMode, max_iter: usize, guards: &EscapeGuards) -> (Label, usize) {
        let p = &self.p;
        let fp = p.fixed_point();
        let ell = i128::from(p.ell());
        let radius = self.capture.unwrap_or(0.0).max(guards.fixed_tol);
        let mut q = project(z);
        let mut m = match mode {
            ViewMode::Plane => ((z.im - q.im()) / TAU).round() as i128,
            ViewMode::Cylinder => 0,
        };
        for step in 0..=max_iter {
            let w = q.lift();
            if self.trap.map_or(false, |t| t.contains(w)) {
                return (Label::Baker, step);
            }
            match guards.check(w, p) {
                Some(Termination::EscapedLeft) => return (Label::Baker, step),
                Some(Termination::EscapedRight) => return (Label::EscapingJulia, step),
                _ => {}
            }
            if let Some(c) = fp {
                if q.dist(&project(c)) < radius {
                    let k = match mode {
                        ViewMode::Plane => m.saturating_add(((q.im() - c.im) / TAU).round() as i128),
                        ViewMode::Cylinder => 0,
                    };
                    let label = match k {
                        0 => Label::AttractingBasin,
                        k => Label::Wandering(k.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64),
                    };
                    return (label, step);
                }
            }
            if step == max_iter {
                break;
            }
            let fw = p.f(w);
            let next = project(fw);
            let jump = ((fw.im - next.im()) / TAU).round() as i128;
            m = m.saturating_mul(ell).saturating_add(jump);
            q = next;
        }
        (Label::Undecided, max_iter)
    }
}

/// Label of one point under the view's guards and iteration limit.
pub fn classify_point(z: Complex64, p: &FamilyParams, spec: &ViewSpec) -> (Label, usize) {
    Classifier::new(p).classify(z, spec.mode, spec.max_iter, &spec.guards)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationImage {
    pub spec: ViewSpec,
    /// Row-major, row 0 at the top.
    pub labels: Vec<Label>,
    pub escape_steps: Vec<usize>,
}

impl ClassificationImage {
    pub fn label(&self, px: usize, py: usize) -> Label {
        self.labels[py * self.spec.width + px]
    }

    pub fn fraction(&self, pred: impl Fn(Label) -> bool) -> f64 {
        self.labels.iter().filter(|&&l| pred(l)).count() as f64 / self.labels.len() as f64
    }

    /// RGB bytes, row-major.
    pub fn rgb(&self) -> Vec<u8> {
        self.labels
            .iter()
            .zip(&self.escape_steps)
            .flat_map(|(&l, &s)| color(l, s))
            .collect()
    }

    /// Labels CSV: `px,py,label,steps`.
    pub fn labels_csv(&self) -> String {
        let mut out = String::from("px,py,label,steps\n");
        for py in 0..self.spec.height {
            for px in 0..self.spec.width {
                let i = py * self.spec.width + px;
                out.push_str(&format!("{px},{py},{},{}\n", self.labels[i], self.escape_steps[i]));
            }
        }
        out
    }
}

/// Fixed palette.
pub fn color(label: Label, steps: usize) -> [u8; 3] {
    let s = steps.min(20) as u8;
    match label {
        Label::Baker => {
            let g = 224 - 8 * s;
            [g, g, g]
        }
        Label::AttractingBasin => [0, 40 + 4 * s, 255 - 6 * s],
        Label::Wandering(_) => [0, 0, 0],
        Label::EscapingJulia => [255, 60 + 8 * s, 4 * s],
        Label::Undecided => [255, 255, 255],
    }
}

/// Classifies every pixel centre.
pub fn render(p: &FamilyParams, spec: &ViewSpec) -> Result<ClassificationImage> {
    spec.validate()?;
    let cl = Classifier::new(p);
    let (labels, escape_steps): (Vec<Label>, Vec<usize>) = (0..spec.width * spec.height)
        .into_par_iter()
        .map(|i| {
            let z = spec.pixel_center(i % spec.width, i / spec.width);
            cl.classify(z, spec.mode, spec.max_iter, &spec.guards)
        })
        .unzip();
    Ok(ClassificationImage {
        spec: *spec,
        labels,
        escape_steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

/// Binary P6 with optional `#` comment lines after the magic number.
pub fn encode_ppm(img: &ClassificationImage, comments: &[String]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"P6\n");
    for c in comments {
        for line in c.lines() {
            out.extend_from_slice(format!("# {line}\n").as_bytes());
        }
    }
    out.extend_from_slice(format!("{} {}\n255\n", img.spec.width, img.spec.height).as_bytes());
    out.extend_from_slice(&img.rgb());
    out
}

/// Parses a P6 file written by [`encode_ppm`]: (width, height, rgb).
pub fn decode_ppm(bytes: &[u8]) -> Option<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).ok()?.to_string());
    }
    if tokens[0] != "P6" || tokens[3] != "255" {
        return None;
    }
    let (w, h) = (tokens[1].parse().ok()?, tokens[2].parse().ok()?);
    let data = bytes.get(pos + 1..)?.to_vec();
    (data.len() == 3 * w * h).then_some((w, h, data))
}

pub fn encode_png(img: &ClassificationImage, comments: &[String]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.spec.width as u32, img.spec.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        for c in comments {
            enc.add_text_chunk("Comment".into(), c.clone())
                .map_err(|e| Error::InvalidParams(format!("png text: {e}")))?;
        }
        let mut w = enc
            .write_header()
            .map_err(|e| Error::InvalidParams(format!("png header: {e}")))?;
        w.write_image_data(&img.rgb())
            .map_err(|e| Error::InvalidParams(format!("png data: {e}")))?;
    }
    Ok(out)
}

pub fn write_image(img: &ClassificationImage, path: &Path, format: ImageFormat) -> Result<()> {
    write_image_with(img, path, format, &[])
}

pub fn write_image_with(img: &ClassificationImage, path: &Path, format: ImageFormat, comments: &[String]) -> Result<()> {
    let bytes = match format {
        ImageFormat::Ppm => encode_ppm(img, comments),
        ImageFormat::Png => encode_png(img, comments)?,
    };
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}
