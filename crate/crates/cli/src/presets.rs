use serde::Deserialize;

use ovq_core::{ModelDescriptor, ModelFile};

use crate::args::Preset;

const TABLE1: &str = include_str!("../presets/table1.json");
const FIGURE1: &str = include_str!("../presets/figure1.json");
const APPENDIX_DEMO: &str = include_str!("../presets/appendix-demo.json");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    models: Vec<Entry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    model: ModelFile,
}

pub fn load(preset: Preset) -> ovq_core::Result<Vec<(String, ModelDescriptor)>> {
    let text = match preset {
        Preset::Table1 => TABLE1,
        Preset::Figure1 => FIGURE1,
        Preset::AppendixDemo => APPENDIX_DEMO,
    };
    let file: PresetFile = serde_json::from_str(text)?;
    file.models.into_iter().map(|e| Ok((e.name, e.model.validate()?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for p in [Preset::Table1, Preset::Figure1, Preset::AppendixDemo] {
            let models = load(p).unwrap();
            assert!(!models.is_empty());
        }
        assert_eq!(load(Preset::Table1).unwrap().len(), 6);
    }
}
