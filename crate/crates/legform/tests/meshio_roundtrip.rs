use legform::meshio::{obj_text, parse_obj, parse_stl, stl_bytes, write_obj, write_stl};
use legform_core::mesh::voxel_to_mesh;
use legform_core::{GridDims, VoxelGrid};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = VoxelGrid> {
    (1usize..5, 1usize..5, 1usize..5, 0.2f64..0.9, any::<u64>()).prop_map(|(nx, ny, nz, density, seed)| {
        let dims = GridDims::new(nx, ny, nz, 5.0).unwrap();
        let mut state = seed | 1;
        let mut grid = VoxelGrid::from_fn(dims, |_, _, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 <= density
        });
        if grid.is_empty() {
            grid.set(0, 0, 0, true);
        }
        grid
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stl_carries_every_triangle(grid in grid_strategy()) {
        let mesh = voxel_to_mesh(&grid).unwrap();
        let bytes = stl_bytes(&mesh);
        prop_assert_eq!(bytes.len(), 84 + 50 * mesh.triangle_count());
        let tris = parse_stl(&bytes).unwrap();
        prop_assert_eq!(tris.len(), mesh.triangle_count());
        for (t, (normal, corners)) in tris.iter().enumerate() {
            let expected = mesh.corners(t);
            for k in 0..3 {
                for a in 0..3 {
                    prop_assert_eq!(corners[k][a], expected[k][a] as f32);
                }
                prop_assert!((normal[k] as f64 - mesh.normals[t][k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn obj_preserves_topology(grid in grid_strategy()) {
        let mesh = voxel_to_mesh(&grid).unwrap();
        let back = parse_obj(&obj_text(&mesh)).unwrap();
        prop_assert_eq!(&back.triangles, &mesh.triangles);
        prop_assert_eq!(back.vertices.len(), mesh.vertices.len());
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            for k in 0..3 {
                prop_assert!((a[k] - b[k]).abs() < 1e-6);
            }
        }
        prop_assert!(back.audit_edges().is_ok());
    }
}

#[test]
fn files_on_disk_match_in_memory_encodings() {
    let dims = GridDims::new(3, 3, 3, 5.0).unwrap();
    let grid = VoxelGrid::from_fn(dims, |x, y, z| (x + y + z) % 2 == 0);
    let mesh = voxel_to_mesh(&grid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let stl = dir.path().join("m.stl");
    let obj = dir.path().join("m.obj");
    assert_eq!(write_stl(&mesh, &stl).unwrap(), 84 + 50 * mesh.triangle_count());
    write_obj(&mesh, &obj).unwrap();
    assert_eq!(std::fs::read(&stl).unwrap(), stl_bytes(&mesh));
    assert_eq!(std::fs::read_to_string(&obj).unwrap(), obj_text(&mesh));
}

#[test]
fn malformed_files_are_rejected() {
    assert!(parse_stl(&[0u8; 50]).is_err());
    let mut bytes = vec![0u8; 84];
    bytes[80] = 2;
    assert!(parse_stl(&bytes).is_err());
    assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
}
