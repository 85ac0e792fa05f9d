//! Panel furniture assembled from axis-aligned boards. Parts may
//! interpenetrate; each part is a closed box.
//!
//! Local frame: x is width, y is up, z is depth with +z at the front.

use super::{Aabb, TriangleMesh};
use crate::math::Vec3;

fn boxed(mesh: &mut TriangleMesh, name: &str, min: [f64; 3], max: [f64; 3]) {
    mesh.push_cuboid(name, Vec3::from(min), Vec3::from(max));
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub width: f64,
    pub seat_height: f64,
    pub seat_depth: f64,
    pub seat_thickness: f64,
    pub leg_size: f64,
    pub backrest: bool,
    /// Above the seat surface.
    pub backrest_height: f64,
    pub armrests: bool,
    /// Absolute height of the armrest top above the floor.
    pub armrest_height: f64,
    pub armrest_depth: f64,
    pub armrest_width: f64,
}

impl BenchSpec {
    pub fn mesh(&self) -> TriangleMesh {
        let mut m = TriangleMesh::new();
        let (hw, hd) = (self.width / 2.0, self.seat_depth / 2.0);
        let seat_bottom = self.seat_height - self.seat_thickness;
        let l = self.leg_size;
        for (name, x0, z0) in [
            ("leg_front_left", -hw, hd - l),
            ("leg_front_right", hw - l, hd - l),
            ("leg_back_left", -hw, -hd),
            ("leg_back_right", hw - l, -hd),
        ] {
            boxed(&mut m, name, [x0, 0.0, z0], [x0 + l, seat_bottom, z0 + l]);
        }
        boxed(&mut m, "seat", [-hw, seat_bottom, -hd], [hw, self.seat_height, hd]);
        if self.backrest {
            boxed(
                &mut m,
                "backrest",
                [-hw, self.seat_height, -hd],
                [hw, self.seat_height + self.backrest_height, -hd + self.seat_thickness],
            );
        }
        if self.armrests {
            let bar = self.seat_thickness.min(self.armrest_height - self.seat_height);
            let aw = self.armrest_width;
            let z1 = -hd + self.armrest_depth;
            for (side, x0) in [("left", -hw), ("right", hw - aw)] {
                boxed(
                    &mut m,
                    &format!("armrest_{side}"),
                    [x0, self.armrest_height - bar, -hd],
                    [x0 + aw, self.armrest_height, z1],
                );
                boxed(
                    &mut m,
                    &format!("armrest_post_{side}"),
                    [x0, self.seat_height, z1 - aw.min(self.armrest_depth)],
                    [x0 + aw, self.armrest_height - bar, z1],
                );
            }
        }
        m
    }

    /// Free space under the seat between the legs.
    pub fn cavity(&self) -> Aabb {
        let (hw, hd, l) = (self.width / 2.0, self.seat_depth / 2.0, self.leg_size);
        Aabb {
            min: Vec3::new(-hw + l, 0.0, -hd + l),
            max: Vec3::new(hw - l, self.seat_height - self.seat_thickness, hd - l),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub top_thickness: f64,
    pub leg_size: f64,
}

impl TableSpec {
    pub fn mesh(&self) -> TriangleMesh {
        let mut m = TriangleMesh::new();
        let (hw, hd, l) = (self.width / 2.0, self.depth / 2.0, self.leg_size);
        let under = self.height - self.top_thickness;
        boxed(&mut m, "top", [-hw, under, -hd], [hw, self.height, hd]);
        for (name, x0, z0) in [
            ("leg_front_left", -hw, hd - l),
            ("leg_front_right", hw - l, hd - l),
            ("leg_back_left", -hw, -hd),
            ("leg_back_right", hw - l, -hd),
        ] {
            boxed(&mut m, name, [x0, 0.0, z0], [x0 + l, under, z0 + l]);
        }
        m
    }

    pub fn cavity(&self) -> Aabb {
        let (hw, hd, l) = (self.width / 2.0, self.depth / 2.0, self.leg_size);
        Aabb { min: Vec3::new(-hw + l, 0.0, -hd + l), max: Vec3::new(hw - l, self.height - self.top_thickness, hd - l) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShelfSpec {
    pub width: f64,
    pub height: f64,
    pub depth: f64,
    pub compartments: usize,
    pub board_thickness: f64,
    pub back_panel: bool,
}

impl ShelfSpec {
    fn compartment_height(&self) -> f64 {
        let n = self.compartments.max(1) as f64;
        (self.height - (n + 1.0) * self.board_thickness) / n
    }

    pub fn mesh(&self) -> TriangleMesh {
        let mut m = TriangleMesh::new();
        let (hw, hd, t) = (self.width / 2.0, self.depth / 2.0, self.board_thickness);
        boxed(&mut m, "side_left", [-hw, 0.0, -hd], [-hw + t, self.height, hd]);
        boxed(&mut m, "side_right", [hw - t, 0.0, -hd], [hw, self.height, hd]);
        let n = self.compartments.max(1);
        let pitch = self.compartment_height() + t;
        for k in 0..=n {
            let y0 = k as f64 * pitch;
            let name = match k {
                0 => "board_bottom".to_string(),
                k if k == n => "board_top".to_string(),
                k => format!("board_{k}"),
            };
            boxed(&mut m, &name, [-hw + t, y0, -hd], [hw - t, y0 + t, hd]);
        }
        if self.back_panel {
            boxed(&mut m, "back_panel", [-hw + t, t, -hd], [hw - t, self.height - t, -hd + t]);
        }
        m
    }

    /// Interior of one compartment (the lowest).
    pub fn cavity(&self) -> Aabb {
        let (hw, hd, t) = (self.width / 2.0, self.depth / 2.0, self.board_thickness);
        let back = if self.back_panel { t } else { 0.0 };
        Aabb {
            min: Vec3::new(-hw + t, t, -hd + back),
            max: Vec3::new(hw - t, t + self.compartment_height(), hd),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BookholderSpec {
    pub width: f64,
    pub depth: f64,
    pub back_height: f64,
    pub thickness: f64,
    pub lip_height: f64,
}

impl BookholderSpec {
    pub fn mesh(&self) -> TriangleMesh {
        let mut m = TriangleMesh::new();
        let (hw, hd, t) = (self.width / 2.0, self.depth / 2.0, self.thickness);
        boxed(&mut m, "base", [-hw, 0.0, -hd], [hw, t, hd]);
        boxed(&mut m, "back", [-hw, t, -hd], [hw, t + self.back_height, -hd + t]);
        boxed(&mut m, "lip", [-hw, t, hd - t], [hw, t + self.lip_height, hd]);
        m
    }
}
