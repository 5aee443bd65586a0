//! Library directories: one image per entry with a sidecar tag file.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::read_rgb;
use crate::texture::score::TextureEntry;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Loads every `<id>.png|jpg|jpeg` in `dir` whose `<id>.txt` sidecar lists
/// newline-separated tags. Entries are sorted by id; an image without a
/// sidecar is an error.
pub fn load_library(dir: impl AsRef<Path>) -> Result<Vec<TextureEntry>> {
    let dir = dir.as_ref();
    let mut entries = Vec::new();
    let listing = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for item in listing {
        let path = item.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no usable name", path.display())))?
            .to_string();
        let sidecar = path.with_extension("txt");
        let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let tags = text.lines().map(|l| l.trim().to_lowercase()).filter(|l| !l.is_empty()).collect();
        let entry = TextureEntry {
            id,
            image: read_rgb(&path)?,
            tags,
            embedding: None,
        };
        entry.validate()?;
        entries.push(entry);
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Image;
    use crate::io::write_png;

    #[test]
    fn loads_sorted_entries_with_tags() {
        let dir = tempfile::tempdir().unwrap();
        for (id, tags) in [("b_oil", "oil\npainting\n"), ("a_toon", "Cartoon\n\nboy")] {
            write_png(dir.path().join(format!("{id}.png")), &Image::filled(4, 4, 3, 0.5)).unwrap();
            std::fs::write(dir.path().join(format!("{id}.txt")), tags).unwrap();
        }
        std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let lib = load_library(dir.path()).unwrap();
        assert_eq!(lib.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["a_toon", "b_oil"]);
        assert_eq!(lib[0].tags, ["cartoon", "boy"]);
    }

    #[test]
    fn missing_sidecar_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write_png(dir.path().join("x.png"), &Image::filled(2, 2, 3, 0.5)).unwrap();
        assert!(matches!(load_library(dir.path()), Err(Error::Io { .. })));
    }
}
