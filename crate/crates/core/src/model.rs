//! Problem instances, plans, validation and the pick-and-place cost model.
//!
//! An action is one pick-and-place: an empty-hand move to the object
//! (`d_e`), a grasp, a loaded move to the placement (`d_l`) and a release.
//! The cost of a plan with `k` actions is
//!
//! ```text
//! k * (c_g + c_r) + c_m * (sum_i (d_e_i + d_l_i) + d_f)
//! ```
//!
//! where the first empty-hand move starts at the manipulator's initial rest
//! pose and `d_f` returns it from the last placement to its final rest pose.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ToroError};
use crate::geometry::{contact, dist, Contact, Point2, Rect};

/// Tolerance used when matching poses (pick targets, goal occupancy).
pub const POSE_TOL: f64 = 1e-9;

pub type ObjectId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c_g: f64,
    pub c_r: f64,
    pub c_m: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel { c_g: 1.0, c_r: 1.0, c_m: 1.0 }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c_g", self.c_g), ("c_r", self.c_r), ("c_m", self.c_m)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ToroError::InvalidInstance(format!(
                    "cost {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn per_action(&self) -> f64 {
        self.c_g + self.c_r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub poses: Vec<Point2>,
    pub radius: f64,
}

impl Arrangement {
    pub fn new(poses: Vec<Point2>, radius: f64) -> Self {
        Arrangement { poses, radius }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// Everything wrong with an arrangement.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrangementReport {
    pub overlapping: Vec<(usize, usize)>,
    pub out_of_bounds: Vec<usize>,
    pub non_finite: Vec<usize>,
    /// Pairs whose centers are within the tangency band of `2r`. Not a
    /// violation, reported so callers can warn.
    pub tangent: Vec<(usize, usize)>,
}

impl ArrangementReport {
    pub fn is_ok(&self) -> bool {
        self.overlapping.is_empty() && self.out_of_bounds.is_empty() && self.non_finite.is_empty()
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        for (i, j) in &self.overlapping {
            parts.push(format!("pair ({i}, {j}) overlap"));
        }
        for i in &self.out_of_bounds {
            parts.push(format!("pose {i} out of bounds"));
        }
        for i in &self.non_finite {
            parts.push(format!("pose {i} not finite"));
        }
        if parts.is_empty() {
            "ok".to_string()
        } else {
            parts.join("; ")
        }
    }
}

/// Checks pairwise collisions and workspace containment.
pub fn validate_arrangement(a: &Arrangement, workspace: &Rect) -> ArrangementReport {
    let mut report = ArrangementReport::default();
    let r = a.radius;
    for (i, p) in a.poses.iter().enumerate() {
        if !p.is_finite() {
            report.non_finite.push(i);
        } else if !workspace.contains_disc(*p, r) {
            report.out_of_bounds.push(i);
        }
    }
    if !(r > 0.0) {
        return report;
    }
    for i in 0..a.poses.len() {
        for j in i + 1..a.poses.len() {
            match contact(a.poses[i], a.poses[j], r) {
                Ok(Contact::Overlap) => report.overlapping.push((i, j)),
                Ok(Contact::Tangent) => report.tangent.push((i, j)),
                _ => {}
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub start: Arrangement,
    pub goal: Arrangement,
    pub rest_start: Point2,
    pub rest_goal: Point2,
    pub labeled: bool,
    pub cost: CostModel,
    pub workspace: Rect,
}

impl Instance {
    /// Builds an instance and checks that both arrangements are feasible.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        starts: Vec<Point2>,
        goals: Vec<Point2>,
        radius: f64,
        rest_start: Point2,
        rest_goal: Point2,
        labeled: bool,
        cost: CostModel,
        workspace: Rect,
    ) -> Result<Self> {
        let inst = Instance {
            start: Arrangement::new(starts, radius),
            goal: Arrangement::new(goals, radius),
            rest_start,
            rest_goal,
            labeled,
            cost,
            workspace,
        };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<()> {
        if !(self.radius() > 0.0) || !self.radius().is_finite() {
            return Err(ToroError::InvalidInstance(format!(
                "radius must be positive, got {}",
                self.radius()
            )));
        }
        if self.start.radius != self.goal.radius {
            return Err(ToroError::InvalidInstance("start and goal radii differ".into()));
        }
        if self.start.len() != self.goal.len() {
            return Err(ToroError::InvalidInstance(format!(
                "{} starts but {} goals",
                self.start.len(),
                self.goal.len()
            )));
        }
        if !self.rest_start.is_finite() || !self.rest_goal.is_finite() {
            return Err(ToroError::InvalidInstance("rest pose not finite".into()));
        }
        let ws = &self.workspace;
        if !(ws.max_x > ws.min_x && ws.max_y > ws.min_y) {
            return Err(ToroError::InvalidInstance("degenerate workspace".into()));
        }
        self.cost.validate()?;
        for (name, arr) in [("start", &self.start), ("goal", &self.goal)] {
            let report = validate_arrangement(arr, ws);
            if !report.is_ok() {
                return Err(ToroError::InvalidInstance(format!(
                    "{name} arrangement infeasible: {}",
                    report.describe()
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.start.len()
    }

    pub fn radius(&self) -> f64 {
        self.start.radius
    }

    pub fn start_pose(&self, i: ObjectId) -> Point2 {
        self.start.poses[i]
    }

    pub fn goal_pose(&self, i: ObjectId) -> Point2 {
        self.goal.poses[i]
    }

    /// Objects whose start pose already is their goal pose. They never move.
    pub fn is_stationary(&self, i: ObjectId) -> bool {
        if self.labeled {
            same_pose(self.start.poses[i], self.goal.poses[i])
        } else {
            self.goal.poses.iter().any(|g| same_pose(self.start.poses[i], *g))
        }
    }

    pub fn stationary_count(&self) -> usize {
        (0..self.n()).filter(|&i| self.is_stationary(i)).count()
    }

    /// True when no start pose overlaps any goal pose.
    pub fn is_non_overlapping(&self) -> bool {
        let r = self.radius();
        self.start.poses.iter().all(|s| {
            self.goal
                .poses
                .iter()
                .all(|g| contact(*s, *g, r).map(|c| c != Contact::Overlap).unwrap_or(false))
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json() + "\n")?;
        Ok(())
    }
}

pub(crate) fn same_pose(a: Point2, b: Point2) -> bool {
    dist(a, b) <= POSE_TOL
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    id: usize,
    start: Point2,
    goal: Point2,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    radius: f64,
    workspace: Rect,
    rest_start: Point2,
    rest_goal: Point2,
    #[serde(default = "default_labeled")]
    labeled: bool,
    #[serde(default)]
    cost: CostModel,
    objects: Vec<ObjectEntry>,
}

fn default_labeled() -> bool {
    true
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        let n = self.objects.len();
        let mut slots: Vec<Option<(Point2, Point2)>> = vec![None; n];
        for (k, obj) in self.objects.iter().enumerate() {
            if obj.id >= n {
                return Err(ToroError::Parse(format!(
                    "objects[{k}].id = {} out of range 0..{n}",
                    obj.id
                )));
            }
            if slots[obj.id].is_some() {
                return Err(ToroError::Parse(format!("objects[{k}].id = {} duplicated", obj.id)));
            }
            slots[obj.id] = Some((obj.start, obj.goal));
        }
        let (starts, goals) = slots.into_iter().map(|s| s.unwrap()).unzip();
        Instance::new(
            starts,
            goals,
            self.radius,
            self.rest_start,
            self.rest_goal,
            self.labeled,
            self.cost,
            self.workspace,
        )
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            radius: inst.radius(),
            workspace: inst.workspace,
            rest_start: inst.rest_start,
            rest_goal: inst.rest_goal,
            labeled: inst.labeled,
            cost: inst.cost,
            objects: (0..inst.n())
                .map(|i| ObjectEntry { id: i, start: inst.start.poses[i], goal: inst.goal.poses[i] })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceKind {
    Goal,
    Buffer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub object: ObjectId,
    pub pick: Point2,
    pub place: Point2,
    pub kind: PlaceKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plan {
    pub actions: Vec<Action>,
    pub buffers_used: usize,
}

impl Plan {
    pub fn new(actions: Vec<Action>) -> Self {
        let mut slots: Vec<Point2> = Vec::new();
        for a in actions.iter().filter(|a| a.kind == PlaceKind::Buffer) {
            if !slots.iter().any(|s| same_pose(*s, a.place)) {
                slots.push(a.place);
            }
        }
        Plan { buffers_used: slots.len(), actions }
    }

    pub fn grasps(&self) -> usize {
        self.actions.len()
    }

    /// Total end-effector travel, including the trips from and to the rest poses.
    pub fn distance(&self, inst: &Instance) -> f64 {
        sequence_breakdown(&self.actions, inst.rest_start, inst.rest_goal).distance()
    }

    pub fn to_json(&self, cost: Option<f64>) -> String {
        let file = PlanFile { actions: self.actions.clone(), cost };
        serde_json::to_string_pretty(&file).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(text)?;
        Ok(Plan::new(file.actions))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path.as_ref())?)
    }

    pub fn save(&self, path: impl AsRef<Path>, cost: Option<f64>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json(cost) + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PlanFile {
    actions: Vec<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
}

/// Why a plan cannot be executed.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanViolation {
    /// Offending action index; `None` for end-state failures.
    pub action: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.action {
            Some(k) => write!(f, "action {k}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn violation(k: usize, message: impl Into<String>) -> PlanViolation {
    PlanViolation { action: Some(k), message: message.into() }
}

/// Simulates the plan and reports the first problem found.
pub fn check_plan(plan: &Plan, inst: &Instance) -> std::result::Result<(), PlanViolation> {
    let n = inst.n();
    let r = inst.radius();
    let mut current = inst.start.poses.clone();
    for (k, a) in plan.actions.iter().enumerate() {
        if a.object >= n {
            return Err(violation(k, format!("unknown object {}", a.object)));
        }
        if !a.pick.is_finite() || !a.place.is_finite() {
            return Err(violation(k, "non-finite pose"));
        }
        if inst.is_stationary(a.object) {
            return Err(violation(k, format!("object {} already rests at its goal", a.object)));
        }
        if !same_pose(a.pick, current[a.object]) {
            return Err(violation(k, format!("object {} is not at the pick pose", a.object)));
        }
        if same_pose(a.pick, a.place) {
            return Err(violation(k, "pick and place coincide"));
        }
        match a.kind {
            PlaceKind::Goal => {
                let ok = if inst.labeled {
                    same_pose(a.place, inst.goal.poses[a.object])
                } else {
                    inst.goal.poses.iter().any(|g| same_pose(a.place, *g))
                };
                if !ok {
                    return Err(violation(k, "goal placement is not a goal pose of the object"));
                }
            }
            PlaceKind::Buffer => {
                if !inst.workspace.excludes_disc(a.place, r) {
                    return Err(violation(k, "buffer placement lies on the workspace"));
                }
            }
        }
        for (j, p) in current.iter().enumerate() {
            if j != a.object && contact(a.place, *p, r).unwrap() == Contact::Overlap {
                return Err(violation(k, format!("collision at action {k} with object {j}")));
            }
        }
        current[a.object] = a.place;
    }
    if inst.labeled {
        if let Some(i) = (0..n).find(|&i| !same_pose(current[i], inst.goal.poses[i])) {
            return Err(PlanViolation {
                action: None,
                message: format!("object {i} does not end at its goal"),
            });
        }
    } else {
        let mut filled = vec![false; n];
        for (i, p) in current.iter().enumerate() {
            match inst.goal.poses.iter().position(|g| same_pose(*p, *g)) {
                Some(g) if !filled[g] => filled[g] = true,
                _ => {
                    return Err(PlanViolation {
                        action: None,
                        message: format!("object {i} does not end on a free goal"),
                    })
                }
            }
        }
    }
    Ok(())
}

pub fn plan_is_valid(plan: &Plan, inst: &Instance) -> bool {
    check_plan(plan, inst).is_ok()
}

/// Travel decomposition of an action sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TravelBreakdown {
    /// `(d_e, d_l)` per action.
    pub per_action: Vec<(f64, f64)>,
    pub d_f: f64,
}

impl TravelBreakdown {
    pub fn distance(&self) -> f64 {
        self.per_action.iter().map(|(e, l)| e + l).sum::<f64>() + self.d_f
    }
}

/// Travel of `actions` when the end effector starts at `from` and finishes at `to`.
pub fn sequence_breakdown(actions: &[Action], from: Point2, to: Point2) -> TravelBreakdown {
    let mut at = from;
    let mut per_action = Vec::with_capacity(actions.len());
    for a in actions {
        per_action.push((dist(at, a.pick), dist(a.pick, a.place)));
        at = a.place;
    }
    TravelBreakdown { per_action, d_f: dist(at, to) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub grasp_release_total: f64,
    pub move_total: f64,
    pub travel: TravelBreakdown,
    pub total: f64,
}

/// Cost of a valid plan.
pub fn plan_cost(plan: &Plan, inst: &Instance) -> Result<CostBreakdown> {
    check_plan(plan, inst).map_err(|v| ToroError::InvalidPlan(v.to_string()))?;
    Ok(cost_of_sequence(&plan.actions, inst.rest_start, inst.rest_goal, &inst.cost))
}

/// Cost of an arbitrary action sequence; no validity check.
pub fn cost_of_sequence(actions: &[Action], from: Point2, to: Point2, cost: &CostModel) -> CostBreakdown {
    let travel = sequence_breakdown(actions, from, to);
    let grasp_release_total = actions.len() as f64 * cost.per_action();
    let move_total = cost.c_m * travel.distance();
    CostBreakdown { grasp_release_total, move_total, total: grasp_release_total + move_total, travel }
}

/// Buffer slot `j`: a column of poses just right of the workspace.
pub fn buffer_slot(inst: &Instance, j: usize) -> Point2 {
    let r = inst.radius();
    let margin = r;
    let ws = &inst.workspace;
    Point2::new(ws.max_x + 2.0 * r + margin, ws.min_y + j as f64 * (2.0 * r + margin))
}

/// The first `p` buffer slots.
pub fn buffer_positions(inst: &Instance, p: usize) -> Vec<Point2> {
    (0..p).map(|j| buffer_slot(inst, j)).collect()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two objects each blocking the other's goal.
    pub fn swap_instance() -> Instance {
        Instance::new(
            vec![Point2::new(0.0, 0.0), Point2::new(1.6, 3.0)],
            vec![Point2::new(0.0, 3.0), Point2::new(1.6, 0.0)],
            1.0,
            Point2::new(-2.0, -2.0),
            Point2::new(4.0, 5.0),
            true,
            CostModel::default(),
            Rect::new(-2.0, -2.0, 4.0, 5.0),
        )
        .unwrap()
    }

    pub fn single_object() -> Instance {
        Instance::new(
            vec![Point2::new(1.0, 0.0)],
            vec![Point2::new(2.0, 0.0)],
            0.1,
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            true,
            CostModel { c_g: 0.5, c_r: 0.5, c_m: 1.0 },
            Rect::new(-1.0, -1.0, 4.0, 1.0),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    fn goal_action(inst: &Instance, i: usize) -> Action {
        Action { object: i, pick: inst.start.poses[i], place: inst.goal.poses[i], kind: PlaceKind::Goal }
    }

    #[test]
    fn arrangement_examples() {
        let ws = Rect::new(0.0, 0.0, 10.0, 10.0);
        let ok = Arrangement::new(vec![Point2::new(1.0, 1.0), Point2::new(4.0, 1.0)], 1.0);
        assert!(validate_arrangement(&ok, &ws).is_ok());
        let bad = Arrangement::new(vec![Point2::new(1.0, 1.0), Point2::new(2.0, 1.0)], 1.0);
        let report = validate_arrangement(&bad, &ws);
        assert_eq!(report.overlapping, vec![(0, 1)]);
        assert!(validate_arrangement(&Arrangement::new(vec![], 1.0), &ws).is_ok());
        let out = Arrangement::new(vec![Point2::new(0.0, 0.0)], 1.0);
        assert_eq!(validate_arrangement(&out, &ws).out_of_bounds, vec![0]);
        let touching = Arrangement::new(vec![Point2::new(1.0, 1.0), Point2::new(3.0, 1.0)], 1.0);
        let report = validate_arrangement(&touching, &ws);
        assert!(report.is_ok());
        assert_eq!(report.tangent, vec![(0, 1)]);
    }

    #[test]
    fn single_action_cost() {
        let inst = single_object();
        let plan = Plan::new(vec![goal_action(&inst, 0)]);
        let c = plan_cost(&plan, &inst).unwrap();
        assert!((c.total - 4.0).abs() < 1e-12);
        assert_eq!(c.travel.per_action, vec![(1.0, 1.0)]);
        assert_eq!(c.travel.d_f, 1.0);
    }

    #[test]
    fn empty_plan_cost_is_rest_to_rest() {
        let inst = Instance::new(
            vec![],
            vec![],
            1.0,
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 4.0),
            true,
            CostModel::default(),
            Rect::new(0.0, 0.0, 10.0, 10.0),
        )
        .unwrap();
        assert_eq!(plan_cost(&Plan::default(), &inst).unwrap().total, 5.0);
    }

    #[test]
    fn collision_detected() {
        let inst = swap_instance();
        let plan = Plan::new(vec![goal_action(&inst, 0), goal_action(&inst, 1)]);
        let v = check_plan(&plan, &inst).unwrap_err();
        assert_eq!(v.action, Some(0));
        assert!(v.message.contains("collision"));
        assert!(plan_cost(&plan, &inst).is_err());
    }

    #[test]
    fn buffered_swap_is_valid() {
        let inst = swap_instance();
        let b = buffer_slot(&inst, 0);
        let plan = Plan::new(vec![
            Action { object: 1, pick: inst.start.poses[1], place: b, kind: PlaceKind::Buffer },
            goal_action(&inst, 0),
            Action { object: 1, pick: b, place: inst.goal.poses[1], kind: PlaceKind::Goal },
        ]);
        assert_eq!(check_plan(&plan, &inst), Ok(()));
        assert_eq!(plan.buffers_used, 1);
    }

    #[test]
    fn wrong_pick_and_incomplete_plans_fail() {
        let inst = single_object();
        let mut a = goal_action(&inst, 0);
        a.pick = Point2::new(0.5, 0.0);
        assert!(!plan_is_valid(&Plan::new(vec![a]), &inst));
        assert!(!plan_is_valid(&Plan::default(), &inst));
        let buffer_on_table = Action {
            object: 0,
            pick: inst.start.poses[0],
            place: Point2::new(3.0, 0.0),
            kind: PlaceKind::Buffer,
        };
        assert!(!plan_is_valid(&Plan::new(vec![buffer_on_table]), &inst));
    }

    #[test]
    fn buffer_positions_examples() {
        let inst = Instance::new(
            vec![Point2::new(5.0, 5.0)],
            vec![Point2::new(8.0, 8.0)],
            1.0,
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 10.0),
            true,
            CostModel::default(),
            Rect::new(0.0, 0.0, 10.0, 10.0),
        )
        .unwrap();
        assert!(buffer_positions(&inst, 0).is_empty());
        assert_eq!(
            buffer_positions(&inst, 2),
            vec![Point2::new(13.0, 0.0), Point2::new(13.0, 3.0)]
        );
    }

    #[test]
    fn json_round_trip_and_errors() {
        let inst = swap_instance();
        assert_eq!(Instance::from_json(&inst.to_json()).unwrap(), inst);
        let bad = r#"{"radius": 1, "workspace": [0,0,10,10], "rest_start": [0,0],
            "rest_goal": [0,0], "objects": [{"id": 3, "start": [2,2], "goal": [5,5]}]}"#;
        assert!(matches!(Instance::from_json(bad), Err(ToroError::Parse(_))));
        let malformed = "{\"radius\": 1,\n \"workspace\": oops}";
        match Instance::from_json(malformed) {
            Err(ToroError::Parse(msg)) => assert!(msg.contains("line 2")),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn breakdown_is_additive(
            pts in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 2..12),
            split in 0usize..6,
        ) {
            let actions: Vec<Action> = pts
                .chunks(2)
                .filter(|c| c.len() == 2)
                .enumerate()
                .map(|(i, c)| Action {
                    object: i,
                    pick: Point2::new(c[0].0, c[0].1),
                    place: Point2::new(c[1].0, c[1].1),
                    kind: PlaceKind::Goal,
                })
                .collect();
            let split = split.min(actions.len());
            let from = Point2::new(0.0, 0.0);
            let to = Point2::new(1.0, 1.0);
            let cm = CostModel::default();
            let whole = cost_of_sequence(&actions, from, to, &cm).total;
            let mid = if split == 0 { from } else { actions[split - 1].place };
            let head = cost_of_sequence(&actions[..split], from, mid, &cm).total;
            let tail = cost_of_sequence(&actions[split..], mid, to, &cm).total;
            prop_assert!((whole - head - tail).abs() < 1e-9);
        }
    }
}
