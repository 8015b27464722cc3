#![allow(dead_code)]

use layoutqa::geometry::BBox;
use layoutqa::layout::{Category, Page, Segment};
use layoutqa::question::QAPair;
use layoutqa::scene_graph::SceneGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bbox(c: [f64; 4]) -> BBox {
    BBox::new(c[0], c[1], c[2], c[3]).unwrap()
}

pub fn segment(id: &str, category: Category, c: [f64; 4]) -> Segment {
    Segment {
        id: id.into(),
        category,
        bbox: bbox(c),
        text: String::new(),
        score: 1.0,
    }
}

/// Minimum distance between two rectangles from the clamped axis gaps.
pub fn closed_form_gap(a: &BBox, b: &BBox) -> f64 {
    let dx = (b.x0 - a.x1).max(a.x0 - b.x1).max(0.0);
    let dy = (b.y0 - a.y1).max(a.y0 - b.y1).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

pub fn random_box<R: Rng>(rng: &mut R, w: f64, h: f64) -> BBox {
    // Snap to a coarse grid some of the time so touching edges occur.
    let coord = |rng: &mut R, max: f64| {
        let v = rng.random_range(0.0..max);
        if rng.random_bool(0.3) {
            (v / 10.0).round() * 10.0
        } else {
            v
        }
    };
    loop {
        let (a, b) = (coord(rng, w), coord(rng, w));
        let (c, d) = (coord(rng, h), coord(rng, h));
        if let Ok(b) = BBox::new(a.min(b), c.min(d), a.max(b), c.max(d)) {
            return b;
        }
    }
}

/// A page of `n` segments laid out on a loose grid with jitter, so that
/// columns, rows and near-caption arrangements are all common.
pub fn random_page<R: Rng>(rng: &mut R, page_id: &str, n: usize) -> Page {
    let (w, h): (f64, f64) = (1000.0, 1400.0);
    let segments = (0..n)
        .map(|i| {
            let x0 = rng.random_range(0.0..w - 60.0);
            let y0 = rng.random_range(0.0..h - 30.0);
            let x1 = (x0 + rng.random_range(20.0..400.0)).min(w);
            let y1 = (y0 + rng.random_range(8.0..200.0)).min(h);
            Segment {
                id: format!("s{i:02}"),
                category: Category::DETECTOR[rng.random_range(0..Category::DETECTOR.len())],
                bbox: BBox::new(x0, y0, x1, y1).unwrap(),
                text: String::new(),
                score: 1.0,
            }
        })
        .collect();
    Page {
        page_id: page_id.into(),
        width: w,
        height: h,
        segments,
    }
}

pub fn random_pages(seed: u64, count: usize, max_segments: usize) -> Vec<Page> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(0..=max_segments);
            random_page(&mut rng, &format!("page{i:04}"), n)
        })
        .collect()
}

/// The two-column page with a figure, its caption, a titled section and
/// body text.
pub fn two_column_page() -> Page {
    Page {
        page_id: "twocol".into(),
        width: 200.0,
        height: 300.0,
        segments: vec![
            segment("A", Category::Figure, [10.0, 10.0, 90.0, 80.0]),
            segment("B", Category::Text, [10.0, 85.0, 90.0, 95.0]),
            segment("C", Category::Text, [10.0, 100.0, 90.0, 280.0]),
            segment("D", Category::Title, [110.0, 130.0, 190.0, 140.0]),
            segment("E", Category::Text, [110.0, 10.0, 190.0, 120.0]),
            segment("F", Category::Text, [110.0, 145.0, 190.0, 280.0]),
        ],
    }
}

fn by_name(name: &str) -> Category {
    name.parse().unwrap()
}

/// Answer a generated question from raw coordinates, independently of the
/// program executor. The anchor chosen by the random `unique` step is read
/// from the trace and checked against the bindings.
pub fn oracle_answer(graph: &SceneGraph, q: &QAPair) -> String {
    let segs = graph.segments();
    match q.template_id.as_str() {
        "existence_title" => {
            let any = segs.iter().any(|s| s.category == Category::Title);
            if any { "yes" } else { "no" }.into()
        }
        "position_caption" => {
            let target = anchor(graph, q, "E");
            let caption = graph.caption_of(&target.id).expect("emitted position question has a caption");
            assert!(caption.category.is_caption());
            let (c, t) = (&caption.bbox, &target.bbox);
            if c.y1 <= t.y0 {
                "top".into()
            } else if c.y0 >= t.y1 {
                "bottom".into()
            } else {
                panic!("{}: caption beside its target was emitted", q.question_id)
            }
        }
        "counting_relate" => {
            let a = anchor(graph, q, "E2").bbox;
            let want = by_name(&q.bindings["E1"]);
            let side = q.bindings["R"].as_str();
            let n = segs
                .iter()
                .filter(|s| s.category == want)
                .filter(|s| s.id != anchor(graph, q, "E2").id)
                .filter(|s| match side {
                    "left" => s.bbox.x1 <= a.x0,
                    "right" => s.bbox.x0 >= a.x1,
                    "top" => s.bbox.y1 <= a.y0,
                    "bottom" => s.bbox.y0 >= a.y1,
                    other => panic!("unknown side {other}"),
                })
                .count();
            n.to_string()
        }
        other => panic!("no oracle for template {other}"),
    }
}

fn anchor<'g>(graph: &'g SceneGraph, q: &QAPair, slot: &str) -> &'g Segment {
    let step = q
        .trace
        .iter()
        .find(|t| t.step == "unique")
        .expect("program has a unique step");
    let s = graph.segment(&step.output[0]).expect("anchor exists");
    assert_eq!(s.category, by_name(&q.bindings[slot]), "{}: anchor category", q.question_id);
    s
}

/// Synthetic FUNSD annotation: `rows` question/answer pairs, a header and
/// some unlinked noise. Returns the JSON and the expected answer texts.
pub fn synthetic_form<R: Rng>(rng: &mut R, rows: usize) -> (String, Vec<String>) {
    let vocab = ["date", "name", "total", "fax", "to:", "from", "A-12", "$4.50", "yes", "no"];
    let words = |rng: &mut R, x: f64, y: f64, n: usize| -> (String, Vec<serde_json::Value>) {
        let mut texts = Vec::new();
        let mut out = Vec::new();
        for k in 0..n {
            let t = vocab[rng.random_range(0..vocab.len())].to_string();
            let x0 = x + k as f64 * 40.0;
            out.push(serde_json::json!({"text": t, "box": [x0, y, x0 + 35.0, y + 12.0]}));
            texts.push(t);
        }
        (texts.join(" "), out)
    };
    let mut form = Vec::new();
    let mut answers = Vec::new();
    let (header, hw) = words(rng, 20.0, 5.0, 2);
    form.push(serde_json::json!({"id": 0, "label": "header", "text": header, "box": [20.0, 5.0, 100.0, 17.0], "words": hw, "linking": []}));
    let mut next = 1;
    for r in 0..rows {
        let y = 30.0 + r as f64 * 25.0;
        let nq = rng.random_range(1..3);
        let (q, qw) = words(rng, 20.0, y, nq);
        let na = rng.random_range(1..4);
        let (a, aw) = words(rng, 200.0, y, na);
        let (qi, ai) = (next, next + 1);
        next += 2;
        // Some annotations list the link on both ends, some on one.
        let both = rng.random_bool(0.5);
        form.push(serde_json::json!({"id": qi, "label": "question", "text": q, "box": [20.0, y, 180.0, y + 12.0], "words": qw, "linking": [[qi, ai]]}));
        form.push(serde_json::json!({"id": ai, "label": "answer", "text": a, "box": [200.0, y, 360.0, y + 12.0], "words": aw, "linking": if both { vec![[qi, ai]] } else { vec![] }}));
        answers.push(a);
    }
    let (o, ow) = words(rng, 20.0, 900.0, 1);
    form.push(serde_json::json!({"id": next, "label": "other", "text": o, "box": [20.0, 900.0, 60.0, 912.0], "words": ow, "linking": []}));
    (serde_json::json!({"form": form}).to_string(), answers)
}

pub fn layout_json(pages: &[Page]) -> Vec<u8> {
    layoutqa::layout::serialize_layout(pages)
}
