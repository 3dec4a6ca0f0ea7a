//! Scenarios shipped inside the binary, in listing order.

pub const ALL: [(&str, &str); 6] = [
    ("free_field_bw", include_str!("../scenarios/free_field_bw.toml")),
    ("ghost_pair_bw", include_str!("../scenarios/ghost_pair_bw.toml")),
    ("control_wrong_wedge", include_str!("../scenarios/control_wrong_wedge.toml")),
    ("convergence_trend", include_str!("../scenarios/convergence_trend.toml")),
    ("mollifier_convergence", include_str!("../scenarios/mollifier_convergence.toml")),
    ("heavy_free_field", include_str!("../scenarios/heavy_free_field.toml")),
];

pub fn find(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
