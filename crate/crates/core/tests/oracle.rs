//! Pipeline output against the generator's ground truth.

use std::collections::HashMap;

use fmtprof_core::corpusgen::{
    expected_profile, generate, CorpusSpec, GeneratedCorpus, Malformation, RecipeEntry, Template,
};
use fmtprof_core::mimetype::IdentificationOutcome;
use fmtprof_core::profiler::{emit_to_string, profile_archives, Profiler};
use fmtprof_core::sig_engine::{shipped_broad, shipped_fine};
use fmtprof_core::warc_ingest::{open_archive, DEFAULT_MAX_PAYLOAD};

fn every_template_spec(seed: u64, per_entry: u64) -> CorpusSpec {
    let mut recipe = Vec::new();
    for (i, t) in Template::ALL.into_iter().enumerate() {
        let year = 1996 + (i as u16 % 15);
        recipe.push(RecipeEntry::new(year, t, per_entry));
    }
    recipe.extend([
        RecipeEntry::new(1997, Template::Pdf, per_entry)
            .version("1.2")
            .producer("Acrobat Distiller 3.01 for Windows")
            .creator("Microsoft Word"),
        RecipeEntry::new(2003, Template::Pdf, per_entry).creator("Writer (tm)"),
        RecipeEntry::new(2005, Template::Pdf, per_entry)
            .version("1.6")
            .producer("Ünïcode Producer"),
        RecipeEntry::new(2008, Template::Pdf, per_entry)
            .version("1.5")
            .producer("pdfTeX-1.40.3")
            .malformed(Malformation::PdfEofTruncated),
        RecipeEntry::new(2006, Template::JpegExif, per_entry)
            .software("GIMP 2.8")
            .make("Canon")
            .model("EOS 300D"),
        RecipeEntry::new(2007, Template::TiffBe, per_entry)
            .software("Photoshop; CS3 \"beta\"")
            .make("NIKON"),
        RecipeEntry::new(2009, Template::TiffLe, per_entry).model("DSC-W55"),
        RecipeEntry::new(2002, Template::JpegJfif, per_entry)
            .version("1.02")
            .malformed(Malformation::JpegPictCollision),
        RecipeEntry::new(1996, Template::Html, per_entry).malformed(Malformation::TaglessHtml),
        RecipeEntry::new(2010, Template::Css, per_entry)
            .malformed(Malformation::MissingContentType),
        RecipeEntry::new(2010, Template::Css, per_entry).server_mime("Text/Plain"),
    ]);
    for v in ["2.0", "3.2", "4.0", "4.01", "xhtml-1.0", "xhtml-1.1"] {
        recipe.push(RecipeEntry::new(2001, Template::Html, per_entry).version(v));
    }
    for v in ["1.00", "1.01", "1.02"] {
        recipe.push(RecipeEntry::new(2000, Template::JpegJfif, per_entry).version(v));
    }
    CorpusSpec {
        records_per_file: 17,
        padding: [0, 700],
        ..CorpusSpec::new(seed, recipe)
    }
}

fn gen(spec: &CorpusSpec) -> (tempfile::TempDir, GeneratedCorpus) {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(spec, dir.path()).unwrap();
    (dir, g)
}

/// Record-level comparison, so a mismatch names the template.
#[test]
fn every_record_matches_its_manifest_entry() {
    let (_dir, g) = gen(&every_template_spec(11, 6));
    let (fine, broad) = (shipped_fine(), shipped_broad());
    let profiler = Profiler::new(&fine, &broad).unwrap();
    let by_url: HashMap<&str, _> = g.manifest.iter().map(|e| (e.url.as_str(), e)).collect();
    let mut seen = 0;
    for f in &g.files {
        for rec in open_archive(f).unwrap() {
            let rec = rec.unwrap();
            let e = by_url[rec.url.as_str()];
            let key = profiler.profile_record(&rec).unwrap();
            let what = format!("{:?} {:?}", e.template, e.malformations);
            assert_eq!(key.server, e.server, "{what}");
            assert_eq!(key.broad, e.broad, "broad {what}");
            assert_eq!(key.fine, e.fine, "fine {what}");
            assert_eq!(key.year, e.year, "{what}");
            assert_eq!(rec.crawl_timestamp, e.timestamp);
            assert_eq!(
                fmtprof_core::warc_ingest::extract_year(&rec.crawl_timestamp).unwrap(),
                e.year
            );
            seen += 1;
        }
    }
    assert_eq!(seen, g.manifest.len());
}

#[test]
fn pipeline_equals_expected_profile() {
    let (_dir, g) = gen(&every_template_spec(5, 9));
    let (fine, broad) = (shipped_fine(), shipped_broad());
    let (d, stats) = profile_archives(&g.files, &fine, &broad, 3, DEFAULT_MAX_PAYLOAD).unwrap();
    assert_eq!(stats.records as usize, g.manifest.len());
    assert_eq!(stats.corrupt + stats.bad_timestamp, 0);
    assert_eq!(d.total() as usize, g.manifest.len());
    assert_eq!(
        emit_to_string(&d),
        emit_to_string(&expected_profile(&g.manifest))
    );
}

#[test]
fn extracted_metadata_matches_manifest_for_well_formed_records() {
    let (_dir, g) = gen(&every_template_spec(9, 4));
    let mut checked = 0;
    for e in g.manifest.iter().filter(|e| e.is_well_formed()) {
        let fine: IdentificationOutcome = e.fine.parse().unwrap();
        let Some(m) = fine.mime() else { continue };
        assert_eq!(m.version(), e.version.as_deref(), "{e:?}");
        assert_eq!(m.software(), e.software.as_deref(), "{e:?}");
        assert_eq!(m.hardware(), e.hardware.as_deref(), "{e:?}");
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn planted_software_values_are_recovered() {
    let producers: Vec<String> = (0..12).map(|i| format!("Producer {i}.0")).collect();
    let recipe = producers
        .iter()
        .enumerate()
        .map(|(i, p)| RecipeEntry::new(2000 + i as u16 % 3, Template::Pdf, 3).producer(p))
        .collect();
    let (_dir, g) = gen(&CorpusSpec::new(77, recipe));
    let (fine, broad) = (shipped_fine(), shipped_broad());
    let (d, _) = profile_archives(&g.files, &fine, &broad, 2, DEFAULT_MAX_PAYLOAD).unwrap();
    let t = fmtprof_core::analyzer::software_shares(
        &d,
        "application/pdf",
        fmtprof_core::analyzer::Tool::Broad,
    )
    .unwrap();
    assert_eq!(t.distinct_values, 12);
}
