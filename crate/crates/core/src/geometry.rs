//! Wall scene, receiver scans, the image method and per-patch angles.
//!
//! Conventions: the wall is a rectangle with an outward unit normal and a
//! horizontal width axis. Receiver azimuths are measured in the horizontal
//! plane from the wall normal, positive toward the specular side (away from
//! the transmitter). A height offset `Δh` raises the receiver above the
//! wall-center height.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lobes::ScatterGeometry;
use crate::units;
use crate::vector::Vec3;

/// Allowed slack when testing whether a point lies on the wall rectangle.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub center: Vec3,
    /// Outward unit normal.
    pub normal: Vec3,
    pub width: f64,
    pub height: f64,
    pub material: String,
}

impl Wall {
    /// Horizontal (width) and in-plane vertical (height) unit axes.
    pub fn axes(&self) -> (Vec3, Vec3) {
        let u = Vec3::Z.cross(self.normal).normalized().unwrap_or(Vec3::X);
        let v = self.normal.cross(u);
        (u, v)
    }

    /// Signed distance of `p` in front of the wall plane.
    pub fn distance_in_front(&self, p: Vec3) -> f64 {
        (p - self.center).dot(self.normal)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= 0.5 * self.width + EDGE_EPS && d.dot(v).abs() <= 0.5 * self.height + EDGE_EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub wall: Wall,
    pub tx: Vec3,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
}

impl Scene {
    pub fn new(wall: Wall, tx: Vec3, carrier_frequency: f64) -> Result<Self> {
        if !(wall.center.is_finite() && wall.normal.is_finite() && tx.is_finite()) {
            return Err(Error::InvalidScene("non-finite coordinates"));
        }
        if (wall.normal.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidScene("wall normal must be unit length"));
        }
        if Vec3::Z.cross(wall.normal).norm() < 1e-9 {
            return Err(Error::InvalidScene("wall normal must not be vertical"));
        }
        if !(wall.width > 0.0 && wall.height > 0.0) {
            return Err(Error::InvalidScene("wall dimensions must be positive"));
        }
        if !(wall.distance_in_front(tx) > 0.0) {
            return Err(Error::InvalidScene("transmitter must be in front of the wall"));
        }
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(Error::InvalidScene("carrier frequency must be positive"));
        }
        Ok(Scene { wall, tx, carrier_frequency })
    }

    /// Measurement layout: a 3 m × 3 m wall centered 1.7 m above ground
    /// facing +y, and a transmitter 1.5 m from the wall center at the given
    /// incidence angle, on the -x side, at the same height.
    pub fn measurement(material: impl Into<String>, theta_i_deg: f64) -> Result<Self> {
        Scene::with_layout(material, theta_i_deg, 1.5, 3.0, 3.0, 28e9)
    }

    pub fn with_layout(
        material: impl Into<String>,
        theta_i_deg: f64,
        tx_distance: f64,
        wall_width: f64,
        wall_height: f64,
        frequency_hz: f64,
    ) -> Result<Self> {
        if !(0.0..90.0).contains(&theta_i_deg) {
            return Err(Error::Domain { what: "incidence angle (deg)", value: theta_i_deg });
        }
        let center = Vec3::new(0.0, 0.0, 1.7);
        let th = units::deg_to_rad(theta_i_deg);
        let tx = center + Vec3::new(-libm::sin(th), libm::cos(th), 0.0) * tx_distance;
        let wall = Wall { center, normal: Vec3::Y, width: wall_width, height: wall_height, material: material.into() };
        Scene::new(wall, tx, frequency_hz)
    }

    pub fn wavelength(&self) -> f64 {
        units::wavelength(self.carrier_frequency)
    }

    /// Incidence angle of the transmitter ray at the wall center.
    pub fn incidence_angle(&self) -> f64 {
        (self.tx - self.wall.center).angle_to(self.wall.normal)
    }

    /// Horizontal unit vector pointing toward the specular side.
    pub fn specular_side(&self) -> Vec3 {
        let (u, _) = self.wall.axes();
        if (self.tx - self.wall.center).dot(u) > 0.0 {
            -u
        } else {
            u
        }
    }

    /// Receiver at `azimuth_deg` on a horizontal circle of `radius` around
    /// the wall center, raised by `delta_h`.
    pub fn rx_position(&self, radius: f64, azimuth_deg: f64, delta_h: f64) -> Vec3 {
        let a = units::deg_to_rad(azimuth_deg);
        let n = self.wall.normal;
        let h = Vec3::new(n.x, n.y, 0.0).normalized().unwrap_or(n);
        self.wall.center
            + h * (radius * libm::cos(a))
            + self.specular_side() * (radius * libm::sin(a))
            + Vec3::Z * delta_h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub radius: f64,
    pub azimuth_step_deg: f64,
    pub azimuth_start_deg: f64,
    pub azimuth_end_deg: f64,
    /// Receiver height offsets in meters.
    pub height_offsets: Vec<f64>,
}

impl ScanSpec {
    /// Half circle of radius 1.5 m in 10° steps at the transmitter height.
    pub fn arc() -> Self {
        ScanSpec {
            radius: 1.5,
            azimuth_step_deg: 10.0,
            azimuth_start_deg: -90.0,
            azimuth_end_deg: 90.0,
            height_offsets: alloc::vec![0.0],
        }
    }

    /// The arc repeated at 0, 10, 20 and 30 cm above the transmitter height.
    pub fn semicylinder() -> Self {
        ScanSpec { height_offsets: alloc::vec![0.0, 0.1, 0.2, 0.3], ..ScanSpec::arc() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidScanSpec("radius must be positive"));
        }
        if !(self.azimuth_step_deg > 0.0) {
            return Err(Error::InvalidScanSpec("azimuth step must be positive"));
        }
        if !(-90.0 <= self.azimuth_start_deg
            && self.azimuth_start_deg <= self.azimuth_end_deg
            && self.azimuth_end_deg <= 90.0)
        {
            return Err(Error::InvalidScanSpec("azimuth range must lie within [-90, 90]"));
        }
        let steps = (self.azimuth_end_deg - self.azimuth_start_deg) / self.azimuth_step_deg;
        if (steps - libm::round(steps)).abs() > 1e-9 {
            return Err(Error::InvalidScanSpec("azimuth step must divide the range"));
        }
        if self.height_offsets.is_empty() || self.height_offsets.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidScanSpec("height offsets must be finite and non-empty"));
        }
        let mut hs = self.height_offsets.clone();
        hs.sort_by(f64::total_cmp);
        if hs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidScanSpec("duplicate height offset"));
        }
        Ok(())
    }

    pub fn azimuths(&self) -> Vec<f64> {
        let n = libm::round((self.azimuth_end_deg - self.azimuth_start_deg) / self.azimuth_step_deg) as usize;
        (0..=n).map(|k| self.azimuth_start_deg + k as f64 * self.azimuth_step_deg).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RxPosition {
    pub azimuth_deg: f64,
    pub delta_h: f64,
    pub position: Vec3,
}

/// All receiver positions of a scan, ordered by height offset then azimuth.
pub fn scan_positions(scene: &Scene, spec: &ScanSpec) -> Result<Vec<RxPosition>> {
    spec.validate()?;
    let mut heights = spec.height_offsets.clone();
    heights.sort_by(f64::total_cmp);
    let azimuths = spec.azimuths();
    let mut out = Vec::with_capacity(heights.len() * azimuths.len());
    for &dh in &heights {
        for &az in &azimuths {
            out.push(RxPosition { azimuth_deg: az, delta_h: dh, position: scene.rx_position(spec.radius, az, dh) });
        }
    }
    Ok(out)
}

/// One-bounce specular path found with the image method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePath {
    pub point: Vec3,
    pub r_i: f64,
    pub r_s: f64,
    /// Incidence (= reflection) angle from the normal.
    pub theta_i: f64,
    /// Propagation direction leaving the transmitter.
    pub departure: Vec3,
    /// Propagation direction arriving at the receiver.
    pub arrival: Vec3,
}

impl ImagePath {
    pub fn length(&self) -> f64 {
        self.r_i + self.r_s
    }
}

/// Specular path from `tx` to `rx` via `wall`, if the reflection point falls
/// on the wall rectangle.
///
/// A receiver lying in the wall plane is accepted; its reflection point is
/// the receiver itself and the path directions stay well defined through the
/// image.
pub fn image_path(tx: Vec3, rx: Vec3, wall: &Wall) -> Option<ImagePath> {
    let n = wall.normal;
    let d_tx = wall.distance_in_front(tx);
    let d_rx = wall.distance_in_front(rx);
    if !(d_tx > 0.0 && d_rx >= 0.0) {
        return None;
    }
    let image = tx.mirror(wall.center, n);
    let span = rx - image;
    let len = span.norm();
    let arrival = span.normalized()?;
    let t = d_tx / (d_tx + d_rx);
    let point = image + span * t;
    if !wall.contains(point) {
        return None;
    }
    Some(ImagePath {
        point,
        r_i: t * len,
        r_s: (1.0 - t) * len,
        theta_i: arrival.angle_to(n),
        departure: arrival.reflect(n),
        arrival,
    })
}

/// Reflection point of the specular path, if it lies on the wall.
pub fn specular_point(tx: Vec3, rx: Vec3, wall: &Wall) -> Option<Vec3> {
    image_path(tx, rx, wall).map(|p| p.point)
}

/// Scattering angles and distances for a patch at `patch_center` on a
/// surface with unit normal `wall_normal`.
///
/// `surface_extent` is set to 1; use
/// [`ScatterGeometry::with_surface_extent`] for tiles.
pub fn patch_angles(tx: Vec3, rx: Vec3, patch_center: Vec3, wall_normal: Vec3) -> Result<ScatterGeometry> {
    let inc = patch_center - tx;
    let out = rx - patch_center;
    let d_in = inc.normalized().ok_or(Error::DegenerateGeometry("transmitter on the patch"))?;
    let d_out = out.normalized().ok_or(Error::DegenerateGeometry("receiver on the patch"))?;
    Ok(ScatterGeometry {
        r_i: inc.norm(),
        r_s: out.norm(),
        theta_i: (-d_in).angle_to(wall_normal),
        theta_s: d_out.angle_to(wall_normal),
        psi_r: d_out.angle_to(d_in.reflect(wall_normal)),
        psi_i: d_out.angle_to(-d_in),
        surface_extent: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskShape {
    /// Full gain within the half-power beamwidth, `outside_db` beyond it.
    #[default]
    Flat,
    /// `-12 (θ / HPBW)²` dB, floored at `outside_db`.
    Parabolic,
}

impl MaskShape {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskShape::Flat => "flat",
            MaskShape::Parabolic => "parabolic",
        }
    }
}

impl core::str::FromStr for MaskShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(MaskShape::Flat),
            "parabolic" => Ok(MaskShape::Parabolic),
            _ => Err(Error::InvalidParams("mask shape must be flat or parabolic")),
        }
    }
}

/// Main-beam antenna gain mask relative to boresight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamMask {
    pub hpbw_deg: f64,
    pub outside_db: f64,
    pub shape: MaskShape,
}

impl Default for BeamMask {
    /// 23° horn, -20 dB outside the main beam.
    fn default() -> Self {
        BeamMask { hpbw_deg: 23.0, outside_db: -20.0, shape: MaskShape::Flat }
    }
}

impl BeamMask {
    pub fn isotropic() -> Self {
        BeamMask { hpbw_deg: 360.0, outside_db: 0.0, shape: MaskShape::Flat }
    }

    pub fn parabolic() -> Self {
        BeamMask { shape: MaskShape::Parabolic, ..BeamMask::default() }
    }

    /// Linear gain relative to boresight for a ray `off_axis` radians away.
    pub fn factor(&self, off_axis: f64) -> f64 {
        match self.shape {
            MaskShape::Flat => {
                if off_axis <= units::deg_to_rad(0.5 * self.hpbw_deg) {
                    1.0
                } else {
                    units::db_to_linear(self.outside_db)
                }
            }
            MaskShape::Parabolic => {
                let x = units::rad_to_deg(off_axis) / self.hpbw_deg;
                units::db_to_linear((-12.0 * x * x).max(self.outside_db))
            }
        }
    }
}

/// Square-ish tiles covering the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tiling {
    /// Requested tile edge in meters; the actual edge is shrunk so an integer
    /// number of tiles covers each wall dimension.
    pub edge: f64,
}

impl Default for Tiling {
    fn default() -> Self {
        Tiling { edge: 0.10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    pub index: usize,
    pub center: Vec3,
    pub area: f64,
}

impl Tiling {
    pub fn tiles(&self, wall: &Wall) -> Result<Vec<Tile>> {
        if !(self.edge > 0.0 && self.edge.is_finite()) {
            return Err(Error::InvalidScene("tile edge must be positive"));
        }
        let count = |len: f64| (libm::ceil(len / self.edge - 1e-9) as usize).max(1);
        let (nu, nv) = (count(wall.width), count(wall.height));
        let (du, dv) = (wall.width / nu as f64, wall.height / nv as f64);
        let (u, v) = wall.axes();
        let mut tiles = Vec::with_capacity(nu * nv);
        for j in 0..nv {
            for i in 0..nu {
                let cu = -0.5 * wall.width + (i as f64 + 0.5) * du;
                let cv = -0.5 * wall.height + (j as f64 + 0.5) * dv;
                tiles.push(Tile { index: tiles.len(), center: wall.center + u * cu + v * cv, area: du * dv });
            }
        }
        Ok(tiles)
    }
}

/// Angle between a ray direction and an antenna boresight.
pub fn off_boresight(boresight: Vec3, ray: Vec3) -> f64 {
    boresight.angle_to(ray)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::deg_to_rad;

    fn scene30() -> Scene {
        Scene::measurement("rough_wall", 30.0).unwrap()
    }

    #[test]
    fn fencepost_counts() {
        let s = scene30();
        assert_eq!(scan_positions(&s, &ScanSpec::arc()).unwrap().len(), 19);
        assert_eq!(scan_positions(&s, &ScanSpec::semicylinder()).unwrap().len(), 76);
    }

    #[test]
    fn arc_positions_on_circle_and_ordered() {
        let s = scene30();
        let pos = scan_positions(&s, &ScanSpec::semicylinder()).unwrap();
        for p in pos.iter().filter(|p| p.delta_h == 0.0) {
            assert!((p.position.distance(s.wall.center) - 1.5).abs() < 1e-12);
        }
        for w in pos.windows(2) {
            let key = |p: &RxPosition| (p.delta_h, p.azimuth_deg);
            assert!(key(&w[0]) < key(&w[1]));
        }
    }

    #[test]
    fn transmitter_sits_at_negative_azimuth() {
        let s = scene30();
        let at = s.rx_position(1.5, -30.0, 0.0);
        assert!(at.distance(s.tx) < 1e-12);
        assert!((s.incidence_angle() - deg_to_rad(30.0)).abs() < 1e-12);
    }

    #[test]
    fn scan_spec_validation() {
        let mut spec = ScanSpec::arc();
        spec.azimuth_step_deg = 7.0;
        assert!(spec.validate().is_err());
        spec = ScanSpec::arc();
        spec.radius = 0.0;
        assert!(spec.validate().is_err());
        spec = ScanSpec::arc();
        spec.height_offsets = alloc::vec![0.1, 0.1];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn symmetric_pair_reflects_at_center() {
        let s = scene30();
        let rx = s.rx_position(1.5, 30.0, 0.0);
        let p = specular_point(s.tx, rx, &s.wall).unwrap();
        assert!(p.distance(s.wall.center) < 1e-12);
    }

    #[test]
    fn reflection_off_the_wall_is_absent() {
        let wall =
            Wall { center: Vec3::new(0.0, 0.0, 1.7), normal: Vec3::Y, width: 0.5, height: 0.5, material: "m".into() };
        let tx = Vec3::new(-0.75, 1.3, 1.7);
        // Receiver far behind the transmitter: reflection point well outside.
        let rx = Vec3::new(-5.0, 1.0, 1.7);
        assert!(specular_point(tx, rx, &wall).is_none());
        // Receiver behind the wall.
        assert!(specular_point(tx, Vec3::new(1.0, -0.1, 1.7), &wall).is_none());
    }

    #[test]
    fn out_of_plane_reflection_height() {
        // Image method in closed form: equal distances to the plane put the
        // reflection point halfway in height.
        let s = scene30();
        let rx = s.rx_position(1.5, 30.0, 0.3);
        let p = specular_point(s.tx, rx, &s.wall).unwrap();
        assert!((p.z - 1.85).abs() < 1e-12);
        assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12);
    }

    #[test]
    fn specular_and_backscatter_alignment() {
        let s = scene30();
        let c = s.wall.center;
        let spec_rx = s.rx_position(1.5, 30.0, 0.0);
        let g = patch_angles(s.tx, spec_rx, c, s.wall.normal).unwrap();
        assert!(g.psi_r < 1e-12);
        assert!((g.theta_i - deg_to_rad(30.0)).abs() < 1e-12);
        let back_rx = s.rx_position(1.2, -30.0, 0.0);
        let g = patch_angles(s.tx, back_rx, c, s.wall.normal).unwrap();
        assert!(g.psi_i < 1e-12);
        let high = patch_angles(s.tx, s.rx_position(1.5, 30.0, 0.3), c, s.wall.normal).unwrap();
        // atan(0.3 / 1.5): the raised receiver leaves the specular ray.
        assert!((high.psi_r - libm::atan(0.2)).abs() < 1e-12);
    }

    #[test]
    fn patch_on_transmitter_is_degenerate() {
        let s = scene30();
        assert!(patch_angles(s.tx, s.tx, s.tx, s.wall.normal).is_err());
    }

    #[test]
    fn tiling_covers_wall() {
        let s = scene30();
        let tiles = Tiling { edge: 0.4 }.tiles(&s.wall).unwrap();
        assert_eq!(tiles.len(), 64);
        let area: f64 = tiles.iter().map(|t| t.area).sum();
        assert!((area - 9.0).abs() < 1e-12);
        assert!(tiles.iter().all(|t| s.wall.contains(t.center)));
    }

    #[test]
    fn scene_validation() {
        let mut wall = scene30().wall;
        wall.normal = Vec3::new(0.0, 1.0 + 1e-9, 0.0);
        assert!(Scene::new(wall.clone(), Vec3::new(0.0, 1.0, 1.7), 28e9).is_err());
        wall.normal = Vec3::Y;
        assert!(Scene::new(wall.clone(), Vec3::new(0.0, -1.0, 1.7), 28e9).is_err());
        assert!(Scene::new(wall, Vec3::new(0.0, 1.0, 1.7), 28e9).is_ok());
    }

    #[test]
    fn beam_mask() {
        let m = BeamMask::default();
        assert_eq!(m.factor(deg_to_rad(11.0)), 1.0);
        assert!((m.factor(deg_to_rad(12.0)) - 0.01).abs() < 1e-15);
        assert_eq!(BeamMask::isotropic().factor(core::f64::consts::PI), 1.0);
        let p = BeamMask::parabolic();
        assert_eq!(p.factor(0.0), 1.0);
        // Half power at half the beamwidth.
        assert!((units::linear_to_db(p.factor(deg_to_rad(11.5))) + 3.0).abs() < 1e-12);
        assert!((p.factor(deg_to_rad(80.0)) - 0.01).abs() < 1e-15);
    }
}
