//! Named examples with known answers.

use jetconv::envelope::{build_envelope, DomainBox, Generator};
use jetconv::jet;
use jetconv::{samples, Modulus};

use crate::Example;

struct Row {
    quantity: String,
    computed: f64,
    expected: String,
    pass: bool,
}

fn print(title: &str, rows: &[Row]) -> bool {
    println!("{title}");
    println!("{:<36} {:>22} {:>28}  result", "quantity", "computed", "expected");
    for r in rows {
        println!("{:<36} {:>22.15} {:>28}  {}", r.quantity, r.computed, r.expected, if r.pass { "pass" } else { "FAIL" });
    }
    rows.iter().all(|r| r.pass)
}

pub(crate) fn run(example: Example) -> bool {
    match example {
        Example::SymmetricPower => symmetric_power(),
        Example::HolderGap => holder_gap(),
        Example::Huber => huber(),
    }
}

fn close(quantity: String, computed: f64, expected: f64, tol: f64) -> Row {
    Row { quantity, computed, expected: format!("{expected:.12} ± {tol:e}"), pass: (computed - expected).abs() <= tol }
}

fn symmetric_power() -> bool {
    let mut rows = Vec::new();
    for alpha in [0.25, 0.5, 0.75, 1.0] {
        let jet = samples::symmetric_power(alpha);
        let m = Modulus::holder(alpha).expect("valid exponent");
        let a = jet::compute_a_intrinsic(&jet, &m).expect("coercive").value;
        let lip = jet::lip_omega_g(&jet, &m);
        rows.push(close(format!("A (alpha = {alpha})"), a, 2.0 / (1.0 + 1.0 / alpha).powf(alpha), 1e-9));
        rows.push(close(format!("lip_alpha(G) (alpha = {alpha})"), lip, 2f64.powf(1.0 - alpha), 1e-9));
        rows.push(close(format!("lip/A (alpha = {alpha})"), lip / a, jet::holder_seminorm_factor(alpha), 1e-9));
    }
    print("E = {-1, 1}, f = 1/(1+alpha), G = ±1", &rows)
}

fn holder_gap() -> bool {
    let jet = samples::three_halves_power_grid(401);
    let m = Modulus::holder(0.5).expect("valid exponent");
    let a = jet::compute_a_intrinsic(&jet, &m).expect("coercive").value;
    let lip = jet::lip_omega_g(&jet, &m);
    let lower = (4.0f64 / 3.0).sqrt() - 1e-3;
    let rows = vec![
        Row { quantity: "A".into(), computed: a, expected: format!("[{lower:.6}, 1.3076]"), pass: (lower..=1.3076).contains(&a) },
        close("lip_1/2(G)".into(), lip, 2f64.sqrt(), 1e-9),
    ];
    print("(2/3)|t|^{3/2} on 401 points of [-2, 2], alpha = 1/2", &rows)
}

fn huber() -> bool {
    let gen = Generator::new(samples::single_parabola(), Modulus::linear(), 1.0).expect("valid constant");
    let domain = DomainBox::new(vec![-3.0], vec![3.0]).expect("valid box");
    let model = build_envelope(gen, domain, 4001).expect("valid grid").with_lipschitz_cap(1.0);
    let rows: Vec<Row> = [0.5, 1.0, 2.0, -2.5]
        .into_iter()
        .map(|x: f64| {
            let expected = if x.abs() <= 1.0 { 0.5 * x * x } else { x.abs() - 0.5 };
            close(format!("F_L({x})"), model.eval_lipschitz(1.0, &[x]).expect("inside domain"), expected, 5e-3)
        })
        .collect();
    print("single parabola t^2/2 with L = 1", &rows)
}
