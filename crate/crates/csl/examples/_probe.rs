use csl::mesh::*;
use csl::metric::*;
use csl::moebius::*;
use csl::deform::*;
use csl::spectral::SolverOptions;
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    // criterion 7 probe: blow-up sweep
    let eps = 0.2;
    let lengths = [0.0, 0.5, 1.0, 2.0, 4.0];
    let tip = eps * (-4.0_f64 / eps).exp();
    let mesh = generate_tip_graded_disk(tip, 28).unwrap();
    println!("graded mesh: V={} F={}", mesh.vertex_count(), mesh.triangles().len());
    let base = ConformalMetric::flat(&mesh);
    let table = blowup_experiment(&mesh, &base, eps, &lengths, &SolverOptions::default()).unwrap();
    println!("{}", table.to_csv());
    let p1 = table.rows[2].product_dirichlet;
    let p4 = table.rows[4].product_dirichlet;
    println!("P(4)/P(1) = {:.4}  (criterion asks >= 2)", p4/p1);
    println!("blowup took {:?}", t0.elapsed());

    // criterion 6 probe: ribbon search
    let t1 = Instant::now();
    let mut spec = RibbonSpec::circle(1.0, 0.05, 0);
    spec.resolution_along = 256;
    spec.resolution_across = 6;
    let ribbon = generate_ribbon(&spec).unwrap();
    println!("ribbon: V={} F={}", ribbon.vertex_count(), ribbon.triangles().len());
    let phi = Immersion::from_mesh(&ribbon);
    let budget = SearchBudget { r_steps: 40, max_anchors: 40, multistarts: 10, nm_max_iters: 50, max_evals: 10_000, seed: 1, ..SearchBudget::default() };
    let res = sup_volume_search(&phi, &ribbon, &budget).unwrap();
    println!("ribbon best = {:.4} = {:.4} * 4pi (evals {}), best gamma R={:.3} |t|={:.3}",
        res.best_volume, res.best_volume/(4.0*PI), res.evaluations, res.best.scale, res.best.translation.iter().map(|x|x*x).sum::<f64>().sqrt());
    println!("margin = {:.2}% (criterion asks >= 10%)", (1.0 - res.best_volume/(4.0*PI))*100.0);
    println!("search took {:?}", t1.elapsed());

    // criterion 6b probe: sphere-minus-cap control
    let t2 = Instant::now();
    let cap = generate_cap_chart(10.0, 192).unwrap();
    println!("cap: V={} F={}", cap.vertex_count(), cap.triangles().len());
    let phic = Immersion::from_mesh(&cap);
    let budget2 = SearchBudget { r_steps: 30, max_anchors: 10, multistarts: 6, nm_max_iters: 40, max_evals: 10_000, seed: 2, ..SearchBudget::default() };
    let resc = sup_volume_search(&phic, &cap, &budget2).unwrap();
    println!("cap best = {:.6} = {:.6} * 4pi (evals {})", resc.best_volume, resc.best_volume/(4.0*PI), resc.evaluations);
    println!("cap control: >= 0.95*4pi? {}  < 4pi? {}", resc.best_volume >= 0.95*4.0*PI, resc.best_volume < 4.0*PI);
    println!("cap search took {:?}", t2.elapsed());
}
