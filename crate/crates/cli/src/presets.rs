//! Configs bundled with the binary.

/// `(name, TOML text)` of every bundled config.
pub const PRESETS: [(&str, &str); 12] = [
    ("fig1a", include_str!("../presets/fig1a.toml")),
    ("fig1a_ft", include_str!("../presets/fig1a_ft.toml")),
    ("fig1b", include_str!("../presets/fig1b.toml")),
    ("fig1c", include_str!("../presets/fig1c.toml")),
    ("fig2_left", include_str!("../presets/fig2_left.toml")),
    ("fig2_mid", include_str!("../presets/fig2_mid.toml")),
    ("fig2_right", include_str!("../presets/fig2_right.toml")),
    ("fig3_left", include_str!("../presets/fig3_left.toml")),
    ("fig3_mid", include_str!("../presets/fig3_mid.toml")),
    ("fig3_right", include_str!("../presets/fig3_right.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig4_nm2", include_str!("../presets/fig4_nm2.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
