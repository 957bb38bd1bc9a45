use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use eglpr::acr::{build_model, Preset};
use eglpr::filters::{median_filter, sobel};
use eglpr::locator::{locate_plates, LocatorConfig};
use eglpr::morphology::{dilate, StructuringElement};
use eglpr::nn::layers::conv_forward;
use eglpr::nn::{ForwardMode, Tensor};
use eglpr::raster::{to_gray, BinaryImage, PnmImage};
use eglpr::synth::{gen_scene_dataset, GlyphAtlas, PlateStyle, SceneParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scene() -> PnmImage {
    let s = gen_scene_dataset(&GlyphAtlas::builtin(), 1, 1, &PlateStyle::default(), &SceneParams::default()).unwrap();
    PnmImage::Rgb(s.into_iter().next().unwrap().image)
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn raster(c: &mut Criterion) {
    let img = scene();
    let gray = match &img {
        PnmImage::Rgb(rgb) => to_gray(rgb),
        PnmImage::Gray(g) => g.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mask = BinaryImage::from_fn(gray.width(), gray.height(), |_, _| rng.random_bool(0.2));
    let se = StructuringElement::rect(9, 3).unwrap();
    c.bench_function("sobel 640x480", |b| b.iter(|| sobel(black_box(&gray)).unwrap()));
    c.bench_function("median5 640x480", |b| b.iter(|| median_filter(black_box(&gray), 5).unwrap()));
    c.bench_function("dilate 9x3 640x480", |b| b.iter(|| dilate(black_box(&mask), &se)));
    let locator = LocatorConfig::default();
    c.bench_function("locate_plates 640x480", |b| b.iter(|| locate_plates(black_box(&img), &locator).unwrap()));
}

fn network(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_tensor(&mut rng, &[16, 16, 16]);
    let k = random_tensor(&mut rng, &[3, 3, 16, 32]);
    let bias = random_tensor(&mut rng, &[32]);
    c.bench_function("conv_forward 16x16x16 -> 32", |b| b.iter(|| conv_forward(black_box(&x), &k, &bias).unwrap()));

    let model = build_model(Preset::Desk);
    let weights = model.network.init_weights(&mut rng);
    let glyph = random_tensor(&mut rng, &[32, 32, 1]);
    c.bench_function("desk predict", |b| b.iter(|| model.network.predict(&weights, black_box(&glyph)).unwrap()));
    c.bench_function("desk forward+backward", |b| {
        b.iter(|| {
            let trace = model.network.forward(&weights, black_box(&glyph), ForwardMode::Train(&mut rng)).unwrap();
            model.network.loss_and_gradients(&weights, &trace, 3).unwrap()
        })
    });
}

criterion_group!(benches, raster, network);
criterion_main!(benches);
