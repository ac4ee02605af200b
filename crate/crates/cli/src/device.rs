//! JSON device files. Complex entries are `[re, im]` pairs and matrices are
//! lists of rows.

use std::fmt;
use std::path::Path;

use incompat_core::linalg::{c64, ComplexMatrix};
use incompat_core::quantum::{choi_from_kraus, ChoiChannel, JointChannel, Povm};
use serde::{Deserialize, Serialize};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeviceFile {
    Povm {
        dim: usize,
        effects: Vec<JsonMatrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    ChannelChoi {
        dim_in: usize,
        dim_out: usize,
        choi: JsonMatrix,
    },
    ChannelKraus {
        dim_in: usize,
        dim_out: usize,
        kraus: Vec<JsonMatrix>,
    },
    JointChannel {
        dim_in: usize,
        dim_out1: usize,
        dim_out2: usize,
        choi: JsonMatrix,
    },
}

// Per-kind schemas. Parsing each directly from the text keeps line numbers
// in error messages, which an internally tagged enum would lose.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmFields {
    #[allow(dead_code)]
    kind: String,
    dim: usize,
    effects: Vec<JsonMatrix>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiFields {
    #[allow(dead_code)]
    kind: String,
    dim_in: usize,
    dim_out: usize,
    choi: JsonMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KrausFields {
    #[allow(dead_code)]
    kind: String,
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<JsonMatrix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFields {
    #[allow(dead_code)]
    kind: String,
    dim_in: usize,
    dim_out1: usize,
    dim_out2: usize,
    choi: JsonMatrix,
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, DeviceError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        DeviceError::Parse(format!(
            "line {} column {}, field {path}: {inner}",
            inner.line(),
            inner.column()
        ))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Device {
    Povm(Povm),
    Channel(ChoiChannel),
    Joint(JointChannel),
}

#[derive(Debug)]
pub enum DeviceError {
    Io(String),
    /// Malformed JSON or schema mismatch, with the offending location.
    Parse(String),
    /// Well-formed data that violates a device invariant.
    Validation(String),
}

impl fmt::Display for DeviceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceError::Io(m) => write!(f, "{m}"),
            DeviceError::Parse(m) => write!(f, "parse error: {m}"),
            DeviceError::Validation(m) => write!(f, "validation error: {m}"),
        }
    }
}

fn to_matrix(
    m: &JsonMatrix,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<ComplexMatrix, DeviceError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        let found_cols = m.first().map_or(0, Vec::len);
        return Err(DeviceError::Validation(format!(
            "{what}: expected a {rows}x{cols} matrix, found {}x{found_cols}",
            m.len()
        )));
    }
    let data = m.iter().flatten().map(|&[re, im]| c64(re, im)).collect();
    ComplexMatrix::from_vec(rows, cols, data)
        .map_err(|e| DeviceError::Validation(format!("{what}: {e}")))
}

pub fn from_matrix(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn invalid(e: incompat_core::Error) -> DeviceError {
    DeviceError::Validation(e.to_string())
}

impl DeviceFile {
    pub fn from_json(text: &str) -> Result<DeviceFile, DeviceError> {
        #[derive(Deserialize)]
        struct Kind {
            kind: String,
        }
        let kind: Kind = parse(text)?;
        match kind.kind.as_str() {
            "povm" => {
                let f: PovmFields = parse(text)?;
                Ok(DeviceFile::Povm {
                    dim: f.dim,
                    effects: f.effects,
                    labels: f.labels,
                })
            }
            "channel-choi" => {
                let f: ChoiFields = parse(text)?;
                Ok(DeviceFile::ChannelChoi {
                    dim_in: f.dim_in,
                    dim_out: f.dim_out,
                    choi: f.choi,
                })
            }
            "channel-kraus" => {
                let f: KrausFields = parse(text)?;
                Ok(DeviceFile::ChannelKraus {
                    dim_in: f.dim_in,
                    dim_out: f.dim_out,
                    kraus: f.kraus,
                })
            }
            "joint-channel" => {
                let f: JointFields = parse(text)?;
                Ok(DeviceFile::JointChannel {
                    dim_in: f.dim_in,
                    dim_out1: f.dim_out1,
                    dim_out2: f.dim_out2,
                    choi: f.choi,
                })
            }
            other => Err(DeviceError::Parse(format!(
                "field kind: unknown device kind {other:?}, expected povm, channel-choi, channel-kraus or joint-channel"
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("device files serialize")
    }

    pub fn into_device(self) -> Result<Device, DeviceError> {
        match self {
            DeviceFile::Povm {
                dim,
                effects,
                labels,
            } => {
                let effects = effects
                    .iter()
                    .enumerate()
                    .map(|(x, m)| to_matrix(m, dim, dim, &format!("effects[{x}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Povm::new(effects, labels)
                    .map(Device::Povm)
                    .map_err(invalid)
            }
            DeviceFile::ChannelChoi {
                dim_in,
                dim_out,
                choi,
            } => {
                let n = dim_in * dim_out;
                let choi = to_matrix(&choi, n, n, "choi")?;
                ChoiChannel::new(dim_in, dim_out, choi)
                    .map(Device::Channel)
                    .map_err(invalid)
            }
            DeviceFile::ChannelKraus {
                dim_in,
                dim_out,
                kraus,
            } => {
                let kraus = kraus
                    .iter()
                    .enumerate()
                    .map(|(k, m)| to_matrix(m, dim_out, dim_in, &format!("kraus[{k}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                choi_from_kraus(&kraus, dim_in, dim_out)
                    .map(Device::Channel)
                    .map_err(invalid)
            }
            DeviceFile::JointChannel {
                dim_in,
                dim_out1,
                dim_out2,
                choi,
            } => {
                let n = dim_in * dim_out1 * dim_out2;
                let choi = to_matrix(&choi, n, n, "choi")?;
                JointChannel::new(dim_in, dim_out1, dim_out2, choi)
                    .map(Device::Joint)
                    .map_err(invalid)
            }
        }
    }

    pub fn from_povm(e: &Povm) -> DeviceFile {
        DeviceFile::Povm {
            dim: e.dim(),
            effects: e.effects().iter().map(from_matrix).collect(),
            labels: Some(e.labels().to_vec()),
        }
    }

    pub fn from_channel(c: &ChoiChannel) -> DeviceFile {
        DeviceFile::ChannelChoi {
            dim_in: c.dim_in(),
            dim_out: c.dim_out(),
            choi: from_matrix(c.choi()),
        }
    }
}

pub fn read_device(path: &Path) -> Result<Device, DeviceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DeviceError::Io(format!("{}: {e}", path.display())))?;
    let prefix = |e: DeviceError| match e {
        DeviceError::Parse(m) => DeviceError::Parse(format!("{}: {m}", path.display())),
        DeviceError::Validation(m) => DeviceError::Validation(format!("{}: {m}", path.display())),
        other => other,
    };
    DeviceFile::from_json(&text)
        .and_then(DeviceFile::into_device)
        .map_err(prefix)
}

fn kind(d: &Device) -> &'static str {
    match d {
        Device::Povm(_) => "povm",
        Device::Channel(_) => "channel",
        Device::Joint(_) => "joint-channel",
    }
}

pub fn read_povm(path: &Path) -> Result<Povm, DeviceError> {
    match read_device(path)? {
        Device::Povm(e) => Ok(e),
        other => Err(DeviceError::Validation(format!(
            "{}: expected a povm, found {}",
            path.display(),
            kind(&other)
        ))),
    }
}

pub fn read_channel(path: &Path) -> Result<ChoiChannel, DeviceError> {
    match read_device(path)? {
        Device::Channel(c) => Ok(c),
        other => Err(DeviceError::Validation(format!(
            "{}: expected a channel, found {}",
            path.display(),
            kind(&other)
        ))),
    }
}

pub fn read_joint(path: &Path) -> Result<JointChannel, DeviceError> {
    match read_device(path)? {
        Device::Joint(j) => Ok(j),
        other => Err(DeviceError::Validation(format!(
            "{}: expected a joint-channel, found {}",
            path.display(),
            kind(&other)
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z_HALF: &str = r#"{"kind":"povm","dim":2,"effects":[[[[0.75,0.0],[0.0,0.0]],[[0.0,0.0],[0.25,0.0]]],[[[0.25,0.0],[0.0,0.0]],[[0.0,0.0],[0.75,0.0]]]],"labels":["+1","-1"]}"#;

    #[test]
    fn parses_unbiased_povm() {
        let Device::Povm(e) = DeviceFile::from_json(Z_HALF)
            .unwrap()
            .into_device()
            .unwrap()
        else {
            panic!("expected a povm");
        };
        let z = Povm::unbiased_qubit(0.5).unwrap();
        assert!(e.effect(0).max_abs_diff(z.effect(0)) < 1e-15);
        assert!(e.effect(1).max_abs_diff(z.effect(1)) < 1e-15);
    }

    #[test]
    fn canonical_round_trip() {
        let f = DeviceFile::from_json(Z_HALF).unwrap();
        assert_eq!(f.to_json(), Z_HALF);
    }

    #[test]
    fn incomplete_povm_names_invariant() {
        let text = r#"{"kind":"povm","dim":1,"effects":[[[[0.9,0.0]]]]}"#;
        let err = DeviceFile::from_json(text)
            .unwrap()
            .into_device()
            .unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("completeness") && msg.contains("1.000e-1"),
            "{msg}"
        );
    }

    #[test]
    fn parse_errors_carry_location() {
        let text = "{\"kind\":\"povm\",\n\"dim\":\"two\",\"effects\":[]}";
        let msg = DeviceFile::from_json(text).unwrap_err().to_string();
        assert!(msg.contains("line 2") && msg.contains("dim"), "{msg}");
    }

    proptest::proptest! {
        #[test]
        fn serialize_then_parse_is_identity(seed in 0u64..1000, dim in 1usize..4, outcomes in 1usize..4) {
            use incompat_core::quantum::{sample_random_channel, sample_random_povm};
            let e = sample_random_povm(dim, outcomes, seed).unwrap();
            let f = DeviceFile::from_povm(&e);
            proptest::prop_assert_eq!(DeviceFile::from_json(&f.to_json()).unwrap(), f.clone());
            let Device::Povm(back) = f.into_device().unwrap() else { unreachable!() };
            proptest::prop_assert_eq!(back, e);

            let c = sample_random_channel(dim, outcomes, seed).unwrap();
            let f = DeviceFile::from_channel(&c);
            proptest::prop_assert_eq!(DeviceFile::from_json(&f.to_json()).unwrap(), f.clone());
        }
    }
}
