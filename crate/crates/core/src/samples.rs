//! The two reference passages used throughout tests and fixtures.
//!
//! `figure1` is "After graduation , John moved to Paris": two Scenes, with
//! John a remote Participant of the graduation Scene. `figure2` is the
//! single-Scene "A similar technique is almost impossible to apply to other
//! crops , such as cotton , soybeans and rice ." with an implicit agent.

use crate::category::Category::*;
use crate::graph::{Passage, PassageBuilder, UnitId};

#[derive(Clone, Debug)]
pub struct Figure1 {
    pub passage: Passage,
    pub root: UnitId,
    pub after: UnitId,
    pub graduation_scene: UnitId,
    pub graduation: UnitId,
    pub comma: UnitId,
    pub moved_scene: UnitId,
    pub john: UnitId,
    pub moved: UnitId,
    pub to_paris: UnitId,
    pub to: UnitId,
    pub paris: UnitId,
}

pub fn figure1() -> Figure1 {
    let mut b = PassageBuilder::new("figure1");
    let root = b.unit();
    let graduation_scene = b.unit();
    let moved_scene = b.unit();
    let to_paris = b.unit();
    let after = b.word("After");
    let graduation = b.word("graduation");
    let comma = b.word(",");
    let john = b.word("John");
    let moved = b.word("moved");
    let to = b.word("to");
    let paris = b.word("Paris");
    b.edge(root, after, L)
        .edge(root, graduation_scene, H)
        .edge(root, comma, U)
        .edge(root, moved_scene, H)
        .edge(graduation_scene, graduation, P)
        .edge(moved_scene, john, A)
        .edge(moved_scene, moved, P)
        .edge(moved_scene, to_paris, A)
        .edge(to_paris, to, R)
        .edge(to_paris, paris, C)
        .remote(graduation_scene, john, A);
    Figure1 {
        passage: b.build().expect("figure 1 is well formed"),
        root,
        after,
        graduation_scene,
        graduation,
        comma,
        moved_scene,
        john,
        moved,
        to_paris,
        to,
        paris,
    }
}

#[derive(Clone, Debug)]
pub struct Figure2 {
    pub passage: Passage,
    pub scene: UnitId,
    pub implicit: UnitId,
    pub other_crops: UnitId,
}

pub fn figure2() -> Figure2 {
    let mut b = PassageBuilder::new("figure2");
    let scene = b.unit();
    let technique = b.unit();
    let impossible = b.unit();
    let implicit = b.implicit();
    let other_crops = b.unit();
    let such_as_list = b.unit();
    let such_as = b.unit();

    let w = |b: &mut PassageBuilder, t: &str| b.word(t);
    let a = w(&mut b, "A");
    let similar = w(&mut b, "similar");
    let technique_w = w(&mut b, "technique");
    let is = w(&mut b, "is");
    let almost = w(&mut b, "almost");
    let impossible_w = w(&mut b, "impossible");
    let to1 = w(&mut b, "to");
    let apply = w(&mut b, "apply");
    let to2 = w(&mut b, "to");
    let other = w(&mut b, "other");
    let crops = w(&mut b, "crops");
    let comma1 = w(&mut b, ",");
    let such = w(&mut b, "such");
    let as_ = w(&mut b, "as");
    let cotton = w(&mut b, "cotton");
    let comma2 = w(&mut b, ",");
    let soybeans = w(&mut b, "soybeans");
    let and = w(&mut b, "and");
    let rice = w(&mut b, "rice");
    let period = w(&mut b, ".");

    b.edge(scene, technique, A)
        .edge(technique, a, E)
        .edge(technique, similar, E)
        .edge(technique, technique_w, C)
        .edge(scene, is, F)
        .edge(scene, impossible, D)
        .edge(impossible, almost, E)
        .edge(impossible, impossible_w, C)
        .edge(scene, implicit, A)
        .edge(scene, to1, F)
        .edge(scene, apply, P)
        .edge(scene, other_crops, A)
        .edge(other_crops, to2, R)
        .edge(other_crops, other, E)
        .edge(other_crops, crops, C)
        .edge(other_crops, comma1, U)
        .edge(other_crops, such_as_list, E)
        .edge(such_as_list, such_as, R)
        .edge(such_as, such, T)
        .edge(such_as, as_, T)
        .edge(such_as_list, cotton, C)
        .edge(such_as_list, comma2, U)
        .edge(such_as_list, soybeans, C)
        .edge(such_as_list, and, N)
        .edge(such_as_list, rice, C)
        .edge(scene, period, U);
    Figure2 {
        passage: b.build().expect("figure 2 is well formed"),
        scene,
        implicit,
        other_crops,
    }
}
