//! Kernels with removable singularities at the origin, and the Bessel
//! function J1 they need.
//!
//! `bessel_j1` follows FreeBSD's `e_j1.c` (via Go's `math.J1`). The rational
//! coefficients below carry the original notice:
//!
//! ====================================================
//! Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//!
//! Developed at SunPro, a Sun Microsystems, Inc. business.
//! Permission to use, copy, modify, and distribute this
//! software is freely granted, provided that this notice
//! is preserved.
//! ====================================================

#![allow(clippy::excessive_precision, clippy::unreadable_literal)]

use std::f64::consts::PI;

/// Below this |x| the sinc and 2J1(x)/x kernels use their Taylor series.
pub const SERIES_SWITCH: f64 = 1e-4;

/// The sphere kernel loses digits to cancellation well beyond 1e-4, so its
/// series branch covers a wider window.
const SPHERE_SERIES_SWITCH: f64 = 2.0;

/// sin(x)/x.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// 3 (sin x - x cos x) / x^3, the normalized form factor of a uniform ball.
pub fn sphere_kernel(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SPHERE_SERIES_SWITCH {
        // 3 sum_{n>=1} (-1)^(n+1) 2n x^(2n-2) / (2n+1)!
        let x2 = x * x;
        let mut term: f64 = 1.0; // n = 1 term
        let mut acc: f64 = 1.0;
        let mut n = 1.0_f64;
        loop {
            // ratio of term n+1 to term n
            let next = -term * x2 * (n + 1.0) / (n * (2.0 * n + 2.0) * (2.0 * n + 3.0));
            if next.abs() < 1e-18 * acc.abs() {
                break;
            }
            acc += next;
            term = next;
            n += 1.0;
        }
        acc
    } else {
        let (s, c) = ax.sin_cos();
        3.0 * (s - ax * c) / (ax * ax * ax)
    }
}

/// 2 J1(x) / x, the normalized form factor of a uniform disc.
pub fn jinc(x: f64) -> f64 {
    if x.abs() < SERIES_SWITCH {
        let x2 = x * x;
        1.0 - x2 / 8.0 * (1.0 - x2 / 24.0)
    } else {
        2.0 * bessel_j1(x) / x
    }
}

const R00: f64 = -6.25000000000000000000e-02; // 0xBFB0000000000000
const R01: f64 = 1.40705666955189706048e-03; // 0x3F570D9F98472C61
const R02: f64 = -1.59955631084035597520e-05; // 0xBEF0C5C6BA169668
const R03: f64 = 4.96727999609584448412e-08; // 0x3E6AAAFA46CA0BD9
const S01: f64 = 1.91537599538363460805e-02; // 0x3F939D0B12637E53
const S02: f64 = 1.85946785588630915560e-04; // 0x3F285F56B9CDF664
const S03: f64 = 1.17718464042623683263e-06; // 0x3EB3BFF8333F8498
const S04: f64 = 5.04636257076217042715e-09; // 0x3E35AC88C97DFF2C
const S05: f64 = 1.23542274426137913908e-11; // 0x3DAB2ACFCFB97ED8

const TWO_M27: f64 = 7.450580596923828125e-9;
const TWO_129: f64 = 6.80564733841876926926749214863536422912e38;

/// Bessel function of the first kind of order one.
pub fn bessel_j1(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() || x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let z = if ax >= 2.0 {
        let (s, c) = ax.sin_cos();
        let mut ss = -s - c;
        let mut cc = s - c;
        // sin(x) +- cos(x) = -cos(2x)/(sin(x) -+ cos(x)) avoids cancellation
        if ax < f64::MAX / 2.0 {
            let z = (ax + ax).cos();
            if s * c > 0.0 {
                cc = z / ss;
            } else {
                ss = z / cc;
            }
        }
        if ax > TWO_129 {
            cc / (PI * ax).sqrt()
        } else {
            (pone(ax) * cc - qone(ax) * ss) / (PI * ax).sqrt()
        }
    } else if ax < TWO_M27 {
        0.5 * ax
    } else {
        let z = ax * ax;
        let r = z * (R00 + z * (R01 + z * (R02 + z * R03)));
        let s = 1.0 + z * (S01 + z * (S02 + z * (S03 + z * (S04 + z * S05))));
        0.5 * ax + ax * r / s
    };
    if x < 0.0 {
        -z
    } else {
        z
    }
}

const P1R8: [f64; 6] = [
    0.00000000000000000000e+00, // 0x0000000000000000
    1.17187499999988647970e-01, // 0x3FBDFFFFFFFFFCCE
    1.32394806593073575129e+01, // 0x402A7A9D357F7FCE
    4.12051854307378562225e+02, // 0x4079C0D4652EA590
    3.87474538913960532227e+03, // 0x40AE457DA3A532CC
    7.91447954031891731574e+03, // 0x40BEEA7AC32782DD
];
const P1S8: [f64; 5] = [
    1.14207370375678408436e+02, // 0x405C8D458E656CAC
    3.65093083420853463394e+03, // 0x40AC85DC964D274F
    3.69562060269033463555e+04, // 0x40E20B8697C5BB7F
    9.76027935934950801311e+04, // 0x40F7D42CB28F17BB
    3.08042720627888811578e+04, // 0x40DE1511697A0B2D
];

const P1R5: [f64; 6] = [
    1.31990519556243522749e-11, // 0x3DAD0667DAE1CA7D
    1.17187493190614097638e-01, // 0x3FBDFFFFE2C10043
    6.80275127868432871736e+00, // 0x401B36046E6315E3
    1.08308182990189109773e+02, // 0x405B13B9452602ED
    5.17636139533199752805e+02, // 0x40802D16D052D649
    5.28715201363337541807e+02, // 0x408085B8BB7E0CB7
];
const P1S5: [f64; 5] = [
    5.92805987221131331921e+01, // 0x404DA3EAA8AF633D
    9.91401418733614377743e+02, // 0x408EFB361B066701
    5.35326695291487976647e+03, // 0x40B4E9445706B6FB
    7.84469031749551231769e+03, // 0x40BEA4B0B8A5BB15
    1.50404688810361062679e+03, // 0x40978030036F5E51
];

const P1R3: [f64; 6] = [
    3.02503916137373618024e-09, // 0x3E29FC21A7AD9EDD
    1.17186865567253592491e-01, // 0x3FBDFFF55B21D17B
    3.93297750033315640650e+00, // 0x400F76BCE85EAD8A
    3.51194035591636932736e+01, // 0x40418F489DA6D129
    9.10550110750781271918e+01, // 0x4056C3854D2C1837
    4.85590685197364919645e+01, // 0x4048478F8EA83EE5
];
const P1S3: [f64; 5] = [
    3.47913095001251519989e+01, // 0x40416549A134069C
    3.36762458747825746741e+02, // 0x40750C3307F1A75F
    1.04687139975775130551e+03, // 0x40905B7C5037D523
    8.90811346398256432622e+02, // 0x408BD67DA32E31E9
    1.03787932439639277504e+02, // 0x4059F26D7C2EED53
];

const P1R2: [f64; 6] = [
    1.07710830106873743082e-07, // 0x3E7CE9D4F65544F4
    1.17176219462683348094e-01, // 0x3FBDFF42BE760D83
    2.36851496667608785174e+00, // 0x4002F2B7F98FAEC0
    1.22426109148261232917e+01, // 0x40287C377F71A964
    1.76939711271687727390e+01, // 0x4031B1A8177F8EE2
    5.07352312588818499250e+00, // 0x40144B49A574C1FE
];
const P1S2: [f64; 5] = [
    2.14364859363821409488e+01, // 0x40356FBD8AD5ECDC
    1.25290227168402751090e+02, // 0x405F529314F92CD5
    2.32276469057162813669e+02, // 0x406D08D8D5A2DBD9
    1.17679373287147100768e+02, // 0x405D6B7ADA1884A9
    8.36463893371618283368e+00, // 0x4020BAB1F44E5192
];

fn pone(x: f64) -> f64 {
    let (p, q) = if x >= 8.0 {
        (&P1R8, &P1S8)
    } else if x >= 4.5454 {
        (&P1R5, &P1S5)
    } else if x >= 2.8571 {
        (&P1R3, &P1S3)
    } else {
        (&P1R2, &P1S2)
    };
    let z = 1.0 / (x * x);
    let r = p[0] + z * (p[1] + z * (p[2] + z * (p[3] + z * (p[4] + z * p[5]))));
    let s = 1.0 + z * (q[0] + z * (q[1] + z * (q[2] + z * (q[3] + z * q[4]))));
    1.0 + r / s
}

const Q1R8: [f64; 6] = [
    0.00000000000000000000e+00,  // 0x0000000000000000
    -1.02539062499992714161e-01, // 0xBFBA3FFFFFFFFDF3
    -1.62717534544589987888e+01, // 0xC0304591A26779F7
    -7.59601722513950107896e+02, // 0xC087BCD053E4B576
    -1.18498066702429587167e+04, // 0xC0C724E740F87415
    -4.84385124285750353010e+04, // 0xC0E7A6D065D09C6A
];
const Q1S8: [f64; 6] = [
    1.61395369700722909556e+02,  // 0x40642CA6DE5BCDE5
    7.82538599923348465381e+03,  // 0x40BE9162D0D88419
    1.33875336287249578163e+05,  // 0x4100579AB0B75E98
    7.19657723683240939863e+05,  // 0x4125F65372869C19
    6.66601232617776375264e+05,  // 0x412457D27719AD5C
    -2.94490264303834643215e+05, // 0xC111F9690EA5AA18
];

const Q1R5: [f64; 6] = [
    -2.08979931141764104297e-11, // 0xBDB6FA431AA1A098
    -1.02539050241375426231e-01, // 0xBFBA3FFFCB597FEF
    -8.05644828123936029840e+00, // 0xC0201CE6CA03AD4B
    -1.83669607474888380239e+02, // 0xC066F56D6CA7B9B0
    -1.37319376065508163265e+03, // 0xC09574C66931734F
    -2.61244440453215656817e+03, // 0xC0A468E388FDA79D
];
const Q1S5: [f64; 6] = [
    8.12765501384335777857e+01,  // 0x405451B2FF5A11B2
    1.99179873460485964642e+03,  // 0x409F1F31E77BF839
    1.74684851924908907677e+04,  // 0x40D10F1F0D64CE29
    4.98514270910352279316e+04,  // 0x40E8576DAABAD197
    2.79480751638918118260e+04,  // 0x40DB4B04CF7C364B
    -4.71918354795128470869e+03, // 0xC0B26F2EFCFFA004
];

const Q1R3: [f64; 6] = [
    -5.07831226461766561369e-09, // 0xBE35CFA9D38FC84F
    -1.02537829820837089745e-01, // 0xBFBA3FEB51AEED54
    -4.61011581139473403113e+00, // 0xC01270C23302D9FF
    -5.78472216562783643212e+01, // 0xC04CEC71C25D16DA
    -2.28244540737631695038e+02, // 0xC06C87D34718D55F
    -2.19210128478909325622e+02, // 0xC06B66B95F5C1BF6
];
const Q1S3: [f64; 6] = [
    4.76651550323729509273e+01,  // 0x4047D523CCD367E4
    6.73865112676699709482e+02,  // 0x40850EEBC031EE3E
    3.38015286679526343505e+03,  // 0x40AA684E448E7C9A
    5.54772909720722782367e+03,  // 0x40B5ABBAA61D54A6
    1.90311919338810798763e+03,  // 0x409DBC7A0DD4DF4B
    -1.35201191444307340817e+02, // 0xC060E670290A311F
];

const Q1R2: [f64; 6] = [
    -1.78381727510958865572e-07, // 0xBE87F12644C626D2
    -1.02517042607985553460e-01, // 0xBFBA3E8E9148B010
    -2.75220568278187460720e+00, // 0xC006048469BB4EDA
    -1.96636162643703720221e+01, // 0xC033A9E2C168907F
    -4.23253133372830490089e+01, // 0xC04529A3DE104AAA
    -2.13719211703704061733e+01, // 0xC0355F3639CF6E52
];
const Q1S2: [f64; 6] = [
    2.95333629060523854548e+01,  // 0x403D888A78AE64FF
    2.52981549982190529136e+02,  // 0x406F9F68DB821CBA
    7.57502834868645436472e+02,  // 0x4087AC05CE49A0F7
    7.39393205320467245656e+02,  // 0x40871B2548D4C029
    1.55949003336666123687e+02,  // 0x40637E5E3C3ED8D4
    -4.95949898822628210127e+00, // 0xC013D686E71BE86B
];

fn qone(x: f64) -> f64 {
    let (p, q) = if x >= 8.0 {
        (&Q1R8, &Q1S8)
    } else if x >= 4.5454 {
        (&Q1R5, &Q1S5)
    } else if x >= 2.8571 {
        (&Q1R3, &Q1S3)
    } else {
        (&Q1R2, &Q1S2)
    };
    let z = 1.0 / (x * x);
    let r = p[0] + z * (p[1] + z * (p[2] + z * (p[3] + z * (p[4] + z * p[5]))));
    let s = 1.0 + z * (q[0] + z * (q[1] + z * (q[2] + z * (q[3] + z * (q[4] + z * q[5])))));
    (0.375 + r / s) / x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(got: f64, want: f64, rel: f64, abs: f64) -> bool {
        (got - want).abs() <= rel * want.abs() + abs
    }

    // references: 40-digit arbitrary precision evaluation
    const J1_REF: &[(f64, f64)] = &[
        (1e-5, 4.99999999993750000000026e-6),
        (0.5, 0.2422684576748738863839546),
        (1.0, 0.4400505857449335159596822),
        (1.9999, 0.5767312529177934399777049),
        (2.0, 0.5767248077568733872024482),
        (3.8317, 2.404559043146272634022624e-6),
        (5.0, -0.3275791375914652220377343),
        (7.5, 0.1352484275797055051822405),
        (10.0, 0.04347274616886143666974877),
        (25.5, -0.06204853649148410172107605),
        (123.0, 0.02156735149890660940086328),
        (1000.0, 0.004728311907089523917576072),
    ];

    #[test]
    fn j1_matches_high_precision_values() {
        for &(x, want) in J1_REF {
            let got = bessel_j1(x);
            assert!(close(got, want, 1e-14, 1e-16), "J1({x}) = {got:e}, want {want:e}");
            assert_eq!(bessel_j1(-x), -got);
        }
    }

    #[test]
    fn j1_special_cases() {
        assert!(bessel_j1(f64::NAN).is_nan());
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_j1(f64::INFINITY), 0.0);
    }

    #[test]
    fn sphere_kernel_matches_reference() {
        let cases = [
            (1e-5, 0.9999999999900000000000357),
            (1e-4, 0.9999999990000000003571429),
            (0.5, 0.9752221838163994131635315),
            (1.999, 0.6533943054979149298432193),
            (2.001, 0.6527989616892453659730488),
            (4.4934, 1.371732024194252395599156e-6),
            (10.0, 0.02354008253962546412755168),
            (50.0, -0.001164256230679430219744694),
        ];
        for (x, want) in cases {
            let got = sphere_kernel(x);
            assert!(close(got, want, 1e-14, 1e-16), "sphere({x}) = {got:e}, want {want:e}");
        }
        assert_eq!(sphere_kernel(0.0), 1.0);
    }

    #[test]
    fn series_switch_is_seamless() {
        let lo = SERIES_SWITCH * (1.0 - 1e-9);
        let hi = SERIES_SWITCH * (1.0 + 1e-9);
        assert!((sinc(lo) - sinc(hi)).abs() < 1e-15);
        assert!((jinc(lo) - jinc(hi)).abs() < 1e-15);
        assert!(close(jinc(0.99e-4), 0.9999999987748750005003104, 1e-15, 0.0));
        assert!(close(jinc(1.01e-4), 0.9999999987248750005419813, 1e-15, 0.0));
        assert!(close(jinc(3.0), 0.2260393056839576392836764, 1e-14, 0.0));
        // a few ulps either side of the switch; the kernel's slope there is ~0.2
        let s_lo = sphere_kernel(SPHERE_SERIES_SWITCH * (1.0 - 1e-15));
        let s_hi = sphere_kernel(SPHERE_SERIES_SWITCH * (1.0 + 1e-15));
        assert!((s_lo - s_hi).abs() < 3e-15);
    }

    #[test]
    fn kernels_are_even_and_bounded() {
        for i in 0..2000 {
            let x = i as f64 * 0.0371;
            for f in [sinc, sphere_kernel, jinc] {
                assert_eq!(f(x), f(-x));
                assert!(f(x).abs() <= 1.0 + 1e-15);
            }
        }
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
    }
}
