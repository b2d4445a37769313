app.get('/title', function (req, res) {
  var title = req.title;
  title = encodeURIComponent(title);
  var out = "<h1>" + title + "</h1>";
  res.send(out);
});
