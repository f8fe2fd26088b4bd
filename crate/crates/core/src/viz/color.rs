//! Hue classes, the saturation ladder and fill selection.

use core::fmt;
use core::str::FromStr;

use crate::inference::SigClass;

use super::VizError;

/// sRGB color, written as `#rrggbb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Color {
    pub const WHITE: Color = Color::rgb(255, 255, 255);
    pub const LIGHT_GRAY: Color = Color::rgb(211, 211, 211);
    pub const BLACK: Color = Color::rgb(0, 0, 0);

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Color { r, g, b }
    }

    /// From hue in degrees, saturation and lightness in `[0, 1]`.
    pub fn from_hsl(hue: f64, saturation: f64, lightness: f64) -> Self {
        let s = saturation.clamp(0.0, 1.0);
        let l = lightness.clamp(0.0, 1.0);
        let chroma = (1.0 - libm::fabs(2.0 * l - 1.0)) * s;
        let h = libm::fmod(libm::fmod(hue, 360.0) + 360.0, 360.0) / 60.0;
        let x = chroma * (1.0 - libm::fabs(libm::fmod(h, 2.0) - 1.0));
        let (r1, g1, b1) = match h as u32 {
            0 => (chroma, x, 0.0),
            1 => (x, chroma, 0.0),
            2 => (0.0, chroma, x),
            3 => (0.0, x, chroma),
            4 => (x, 0.0, chroma),
            _ => (chroma, 0.0, x),
        };
        let m = l - chroma / 2.0;
        let channel = |v: f64| libm::round((v + m).clamp(0.0, 1.0) * 255.0) as u8;
        Color::rgb(channel(r1), channel(g1), channel(b1))
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }
}

impl FromStr for Color {
    type Err = VizError;

    /// Accepts `#rrggbb` or one of a few named colors.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || VizError::BadColor(s.into());
        match s.trim().to_ascii_lowercase().as_str() {
            "white" => return Ok(Color::WHITE),
            "lightgray" | "lightgrey" => return Ok(Color::LIGHT_GRAY),
            "black" => return Ok(Color::BLACK),
            _ => {}
        }
        let hex = s.trim().strip_prefix('#').ok_or_else(bad)?;
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(bad());
        }
        let part = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Color::rgb(part(0)?, part(2)?, part(4)?))
    }
}

/// Estimate class shown by hue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HueClass {
    LargePositive,
    SmallPositive,
    SmallNegative,
    LargeNegative,
}

impl HueClass {
    pub const ALL: [HueClass; 4] = [
        HueClass::LargePositive,
        HueClass::SmallPositive,
        HueClass::SmallNegative,
        HueClass::LargeNegative,
    ];

    /// Blue, green, orange, red.
    pub fn hue_degrees(&self) -> f64 {
        match self {
            HueClass::LargePositive => 220.0,
            HueClass::SmallPositive => 130.0,
            HueClass::SmallNegative => 30.0,
            HueClass::LargeNegative => 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        matches!(self, HueClass::LargePositive | HueClass::SmallPositive)
    }

    pub fn token(&self) -> &'static str {
        match self {
            HueClass::LargePositive => "large_positive",
            HueClass::SmallPositive => "small_positive",
            HueClass::SmallNegative => "small_negative",
            HueClass::LargeNegative => "large_negative",
        }
    }
}

/// Sign and size class of a difference. Ties at the break are large; zero is
/// small positive.
pub fn classify_hue(difference: f64, magnitude_break: f64) -> HueClass {
    if difference >= magnitude_break {
        HueClass::LargePositive
    } else if difference >= 0.0 {
        HueClass::SmallPositive
    } else if difference > -magnitude_break {
        HueClass::SmallNegative
    } else {
        HueClass::LargeNegative
    }
}

/// Saturation per significance class; not-significant is always 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationLadder {
    at_1pct: f64,
    at_5pct: f64,
    at_10pct: f64,
}

impl SaturationLadder {
    pub fn new(at_1pct: f64, at_5pct: f64, at_10pct: f64) -> Result<Self, VizError> {
        let ok = at_1pct <= 1.0 && at_1pct > at_5pct && at_5pct > at_10pct && at_10pct > 0.0;
        if !ok {
            return Err(VizError::BadLadder([at_1pct, at_5pct, at_10pct]));
        }
        Ok(SaturationLadder {
            at_1pct,
            at_5pct,
            at_10pct,
        })
    }

    pub fn saturation(&self, class: SigClass) -> f64 {
        match class {
            SigClass::At1Pct => self.at_1pct,
            SigClass::At5Pct => self.at_5pct,
            SigClass::At10Pct => self.at_10pct,
            SigClass::NotSignificant | SigClass::NoTest => 0.0,
        }
    }

    pub fn steps(&self) -> [f64; 3] {
        [self.at_1pct, self.at_5pct, self.at_10pct]
    }
}

impl Default for SaturationLadder {
    fn default() -> Self {
        SaturationLadder {
            at_1pct: 1.0,
            at_5pct: 0.65,
            at_10pct: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RenderMode {
    /// Four hues at full saturation; significance ignored.
    Difference,
    /// Sign only (blue/red), saturation by significance.
    PValue,
    /// Four hues, saturation by significance.
    Combined,
}

impl RenderMode {
    pub const ALL: [RenderMode; 3] = [
        RenderMode::Difference,
        RenderMode::PValue,
        RenderMode::Combined,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            RenderMode::Difference => "difference",
            RenderMode::PValue => "pvalue",
            RenderMode::Combined => "combined",
        }
    }
}

impl FromStr for RenderMode {
    type Err = VizError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RenderMode::ALL
            .into_iter()
            .find(|m| m.token() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| VizError::UnknownMode(s.into()))
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Everything besides the mode that decides a fill.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillStyle {
    pub ladder: SaturationLadder,
    pub not_significant_fill: Color,
    pub no_test_fill: Color,
}

impl Default for FillStyle {
    fn default() -> Self {
        FillStyle {
            ladder: SaturationLadder::default(),
            not_significant_fill: Color::WHITE,
            no_test_fill: Color::LIGHT_GRAY,
        }
    }
}

/// Chromatic fill at a given saturation: lightness rises toward white as
/// saturation falls, so saturation 0 is white.
pub fn shade(hue_degrees: f64, saturation: f64) -> Color {
    Color::from_hsl(hue_degrees, saturation, 1.0 - saturation / 2.0)
}

/// Fill for one area. `hue` is `None` when the difference is undefined.
pub fn fill_color(
    mode: RenderMode,
    hue: Option<HueClass>,
    sig: SigClass,
    style: &FillStyle,
) -> Color {
    let hue = match (hue, sig) {
        (None, _) | (_, SigClass::NoTest) => return style.no_test_fill,
        (Some(h), _) => h,
    };
    match mode {
        RenderMode::Difference => shade(hue.hue_degrees(), 1.0),
        RenderMode::PValue | RenderMode::Combined if sig == SigClass::NotSignificant => {
            style.not_significant_fill
        }
        RenderMode::PValue => {
            let sign_hue = if hue.is_positive() {
                HueClass::LargePositive
            } else {
                HueClass::LargeNegative
            };
            shade(sign_hue.hue_degrees(), style.ladder.saturation(sig))
        }
        RenderMode::Combined => shade(hue.hue_degrees(), style.ladder.saturation(sig)),
    }
}
