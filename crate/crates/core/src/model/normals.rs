use nalgebra::Vector3;

/// Output of [`vertex_normals`].
#[derive(Clone, Debug, PartialEq)]
pub struct VertexNormals {
    /// Unnormalized sums of incident face normals (length is twice the incident area).
    pub raw: Vec<Vector3<f64>>,
    pub unit: Vec<Vector3<f64>>,
    /// Vertices without any non-degenerate incident face; their normal is `+z`.
    pub isolated: Vec<u32>,
}

/// Area-weighted vertex normals.
pub fn vertex_normals(vertices: &[Vector3<f64>], triangles: &[[u32; 3]]) -> VertexNormals {
    let mut raw = vec![Vector3::zeros(); vertices.len()];
    for tri in triangles {
        let [a, b, c] = tri.map(|i| i as usize);
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        raw[a] += n;
        raw[b] += n;
        raw[c] += n;
    }
    let mut isolated = Vec::new();
    let unit = raw
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let len = n.norm();
            if len > 0.0 {
                n / len
            } else {
                isolated.push(i as u32);
                Vector3::z()
            }
        })
        .collect();
    VertexNormals {
        raw,
        unit,
        isolated,
    }
}

/// Gradient of normalization `n / |n|` given the upstream gradient.
#[inline]
pub(crate) fn normalize_vjp(raw: &Vector3<f64>, unit: &Vector3<f64>, g: &Vector3<f64>) -> Vector3<f64> {
    let len = raw.norm();
    if len == 0.0 {
        return Vector3::zeros();
    }
    (g - unit * unit.dot(g)) / len
}

/// Back-propagates `dL/d unit normals` to `dL/d vertices`, accumulating into
/// `grad_vertices`.
pub fn vertex_normals_vjp(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    normals: &VertexNormals,
    grad_unit: &[Vector3<f64>],
    grad_vertices: &mut [Vector3<f64>],
) {
    let grad_raw: Vec<Vector3<f64>> = normals
        .raw
        .iter()
        .zip(&normals.unit)
        .zip(grad_unit)
        .map(|((r, u), g)| normalize_vjp(r, u, g))
        .collect();
    raw_normals_vjp(vertices, triangles, &grad_raw, grad_vertices);
}

/// Back-propagates `dL/d raw normals` through the face-normal sums.
pub(crate) fn raw_normals_vjp(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    grad_raw: &[Vector3<f64>],
    grad_vertices: &mut [Vector3<f64>],
) {
    for tri in triangles {
        let [a, b, c] = tri.map(|i| i as usize);
        let gn = grad_raw[a] + grad_raw[b] + grad_raw[c];
        if gn == Vector3::zeros() {
            continue;
        }
        let e1 = vertices[b] - vertices[a];
        let e2 = vertices[c] - vertices[a];
        // n = e1 x e2
        let g1 = e2.cross(&gn);
        let g2 = gn.cross(&e1);
        grad_vertices[b] += g1;
        grad_vertices[c] += g2;
        grad_vertices[a] -= g1 + g2;
    }
}
